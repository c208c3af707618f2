#include "srapf/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "srapf/errors.hpp"

namespace srapf {

namespace {

using json = nlohmann::json;

constexpr char kMagic[8] = {'S', 'R', 'A', 'P', 'F', 'C', 'K', 'P'};

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

template <typename T>
void write_pod(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw FormatError("checkpoint truncated");
  return v;
}

json architecture(const ModelConfig& c) {
  return {{"raw_dim", c.raw_dim},         {"vocab_size", c.vocab_size},
          {"width", c.width},             {"mlp_hidden", c.mlp_hidden},
          {"visual_blocks", c.visual_blocks}, {"text_blocks", c.text_blocks},
          {"embed_dim", c.embed_dim},     {"num_classes", c.num_classes},
          {"seed", c.seed}};
}

ModelConfig parse_architecture(const json& j) {
  ModelConfig c;
  c.raw_dim = j.at("raw_dim");
  c.vocab_size = j.at("vocab_size");
  c.width = j.at("width");
  c.mlp_hidden = j.at("mlp_hidden");
  c.visual_blocks = j.at("visual_blocks");
  c.text_blocks = j.at("text_blocks");
  c.embed_dim = j.at("embed_dim");
  c.num_classes = j.at("num_classes");
  c.seed = j.at("seed");
  return c;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  json header;
  header["architecture"] = architecture(ckpt.model.config());
  header["class_names"] = ckpt.model.class_names();
  header["stage"] = ckpt.stage;
  header["epoch"] = ckpt.epoch;
  header["id_val_top1"] = ckpt.id_val_top1;
  header["config_hash"] = ckpt.config_hash;
  header["freeze_plan"]["trainable_groups"] = ckpt.plan.trainable_groups;
  header["freeze_plan"]["group_learning_rates"] = ckpt.plan.group_learning_rates;
  header["parameters"] = json::array();
  for (const auto& p : ckpt.model.parameters())
    header["parameters"].push_back(
        {{"name", p.name}, {"group", p.group}, {"rows", p.value.rows()}, {"cols", p.value.cols()}});
  const std::string text = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out.write(kMagic, sizeof(kMagic));
  write_pod<std::uint32_t>(out, kCheckpointFormatVersion);
  write_pod<std::uint64_t>(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& p : ckpt.model.parameters())
    for (Eigen::Index i = 0; i < p.value.rows(); ++i)
      for (Eigen::Index j = 0; j < p.value.cols(); ++j) write_pod<double>(out, p.value(i, j));
  if (!out) throw IoError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw FormatError(path.string() + " is not a checkpoint");
  const auto version = read_pod<std::uint32_t>(in);
  if (version != kCheckpointFormatVersion)
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  const auto header_len = read_pod<std::uint64_t>(in);
  std::string text(header_len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(header_len));
  if (!in) throw FormatError("checkpoint header truncated");
  const json header = json::parse(text);

  DualEncoderModel model(parse_architecture(header.at("architecture")));
  auto& params = model.parameters();
  const auto& described = header.at("parameters");
  if (described.size() != params.size())
    throw StructuralError("checkpoint parameter count does not match its architecture");
  for (std::size_t k = 0; k < params.size(); ++k) {
    const auto& d = described[k];
    if (d.at("name") != params[k].name || d.at("rows") != params[k].value.rows() ||
        d.at("cols") != params[k].value.cols())
      throw StructuralError("checkpoint parameter '" + d.at("name").get<std::string>() +
                            "' does not match the architecture");
    for (Eigen::Index i = 0; i < params[k].value.rows(); ++i)
      for (Eigen::Index j = 0; j < params[k].value.cols(); ++j)
        params[k].value(i, j) = read_pod<double>(in);
  }
  model.set_class_names(header.at("class_names").get<std::vector<std::string>>());

  FreezePlan plan;
  plan.trainable_groups =
      header.at("freeze_plan").at("trainable_groups").get<std::set<std::string>>();
  plan.group_learning_rates =
      header.at("freeze_plan").at("group_learning_rates").get<std::map<std::string, double>>();
  return Checkpoint{std::move(model), std::move(plan), header.at("stage"), header.at("epoch"),
                    header.at("id_val_top1"), header.at("config_hash")};
}

}  // namespace srapf
