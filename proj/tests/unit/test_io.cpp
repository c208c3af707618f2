#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "gen.hpp"
#include "srapf/checkpoint.hpp"
#include "srapf/config.hpp"
#include "srapf/errors.hpp"

using namespace srapf;
using namespace srapf::testing;

namespace {

std::filesystem::path temp(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("srapf_io_" + name);
}

Checkpoint sample_checkpoint() {
  DualEncoderModel m(tiny_config(3));
  randomize(m, 4);
  m.set_class_names({"cat", "sea lion", "dog"});
  const FreezePlan plan = build_freeze_plan(m, 2, 1, 1e-6, 1e-3);
  return Checkpoint{m, plan, "stage2", 7, 0.8125, "a1b2c3"};
}

}  // namespace

TEST(Checkpoint, RoundTripIsBitExact) {
  const Checkpoint c = sample_checkpoint();
  const auto path = temp("ckpt.bin");
  save_checkpoint(path, c);
  const Checkpoint back = load_checkpoint(path);
  std::filesystem::remove(path);
  ASSERT_EQ(back.model.parameters().size(), c.model.parameters().size());
  for (std::size_t i = 0; i < c.model.parameters().size(); ++i) {
    const auto& a = c.model.parameters()[i];
    const auto& b = back.model.parameters()[i];
    EXPECT_EQ(a.name, b.name);
    EXPECT_EQ(a.group, b.group);
    EXPECT_EQ(a.value, b.value) << a.name;
  }
  EXPECT_EQ(back.model.class_names(), c.model.class_names());
  EXPECT_EQ(back.plan.trainable_groups, c.plan.trainable_groups);
  EXPECT_EQ(back.plan.group_learning_rates, c.plan.group_learning_rates);
  EXPECT_EQ(back.stage, "stage2");
  EXPECT_EQ(back.epoch, 7);
  EXPECT_EQ(back.id_val_top1, 0.8125);
  EXPECT_EQ(back.config_hash, "a1b2c3");
  EXPECT_EQ(back.model.config().visual_blocks, c.model.config().visual_blocks);
}

TEST(Checkpoint, ContainerLayout) {
  const auto path = temp("layout.bin");
  save_checkpoint(path, sample_checkpoint());
  std::ifstream in(path, std::ios::binary);
  char magic[8];
  in.read(magic, 8);
  EXPECT_EQ(std::string(magic, 8), "SRAPFCKP");
  std::uint32_t version = 0;
  in.read(reinterpret_cast<char*>(&version), 4);
  EXPECT_EQ(version, kCheckpointFormatVersion);
  std::uint64_t header_len = 0;
  in.read(reinterpret_cast<char*>(&header_len), 8);
  std::string header(header_len, '\0');
  in.read(header.data(), static_cast<std::streamsize>(header_len));
  const auto j = nlohmann::json::parse(header);
  EXPECT_EQ(j.at("stage"), "stage2");
  const auto data_bytes = std::filesystem::file_size(path) - 20 - header_len;
  EXPECT_EQ(data_bytes, sample_checkpoint().model.scalar_count() * 8);
  std::filesystem::remove(path);
}

TEST(Checkpoint, BadMagicTruncationAndMissingFile) {
  const auto path = temp("bad.bin");
  {
    std::ofstream out(path, std::ios::binary);
    out << "NOTACKPTxxxxxxxxxxxx";
  }
  EXPECT_THROW(load_checkpoint(path), FormatError);
  save_checkpoint(path, sample_checkpoint());
  const auto size = std::filesystem::file_size(path);
  std::filesystem::resize_file(path, size - 16);
  EXPECT_THROW(load_checkpoint(path), FormatError);
  std::filesystem::remove(path);
  EXPECT_THROW(load_checkpoint(path), IoError);
}

TEST(ConfigFile, JsonFileRoundTrip) {
  StageConfig c;
  c.stage = "stage1";
  c.use_ra = true;
  c.perturbation.epsilon = 0.02;
  const auto path = temp("config.json");
  write_json_file(path, stage_config_to_json(c));
  const StageConfig back = stage_config_from_json(read_json_file(path));
  std::filesystem::remove(path);
  EXPECT_EQ(config_hash(back), config_hash(c));
  EXPECT_TRUE(back.use_ra);
  EXPECT_EQ(back.perturbation.epsilon, 0.02);
  EXPECT_THROW(read_json_file(path), IoError);
}
