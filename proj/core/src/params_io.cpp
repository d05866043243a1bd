#include <bit>
#include <cstring>

#include <json.hpp>

#include "gazelens/error.hpp"
#include "gazelens/nn.hpp"
#include "gazelens/text_io.hpp"

namespace gazelens::nn {
namespace {

constexpr char kMagic[8] = {'G', 'Z', 'L', 'N', 'N', 'P', '0', '1'};

template <typename T>
void put(std::string& out, T v) {
  static_assert(std::endian::native == std::endian::little, "binary params format assumes a little-endian host");
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    if (pos_ + sizeof(T) > bytes_.size()) throw Error("nn", "truncated parameter file");
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string_view take(std::size_t n) {
    if (pos_ + n > bytes_.size()) throw Error("nn", "truncated parameter file");
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const noexcept { return pos_ == bytes_.size(); }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

std::vector<double> config_values(const ArchConfig& config) {
  return std::visit(
      [](const auto& c) -> std::vector<double> {
        using T = std::decay_t<decltype(c)>;
        auto d = [](std::size_t x) { return static_cast<double>(x); };
        if constexpr (std::is_same_v<T, LstmConfig>) {
          return {d(c.input_width), d(c.hidden_size)};
        } else if constexpr (std::is_same_v<T, CnnConfig>) {
          return {d(c.input_width), d(c.c1_channels), d(c.c1_kernel), c.c1_pool == PoolKind::Max ? 1.0 : 0.0,
                  d(c.c2_channels), d(c.c2_kernel), c.c2_pool == PoolKind::Max ? 1.0 : 0.0, d(c.l1_size),
                  c.dropout};
        } else {
          return {d(c.input_width), d(c.hidden_size), d(c.output_width)};
        }
      },
      config);
}

ArchConfig config_from_values(ModelKind kind, const std::vector<double>& v) {
  auto z = [&](std::size_t i) {
    if (i >= v.size()) throw Error("nn", "parameter file has too few config values");
    return static_cast<std::size_t>(v[i]);
  };
  switch (kind) {
    case ModelKind::Lstm: return LstmConfig{z(0), z(1)};
    case ModelKind::Cnn: {
      CnnConfig c;
      c.input_width = z(0);
      c.c1_channels = z(1);
      c.c1_kernel = z(2);
      c.c1_pool = z(3) == 1 ? PoolKind::Max : PoolKind::Average;
      c.c2_channels = z(4);
      c.c2_kernel = z(5);
      c.c2_pool = z(6) == 1 ? PoolKind::Max : PoolKind::Average;
      c.l1_size = z(7);
      if (v.size() < 9) throw Error("nn", "parameter file has too few config values");
      c.dropout = v[8];
      return c;
    }
    case ModelKind::Ffn: return FfnConfig{z(0), z(1), z(2)};
  }
  throw Error("nn", "unknown model kind");
}

ModelKind kind_from_int(std::uint32_t k) {
  if (k > 2) throw Error("nn", "unknown model kind " + std::to_string(k));
  return static_cast<ModelKind>(k);
}

ModelKind kind_from_name(std::string_view s) {
  for (ModelKind k : {ModelKind::Lstm, ModelKind::Cnn, ModelKind::Ffn})
    if (to_string(k) == s) return k;
  throw Error("nn", "unknown model kind '" + std::string(s) + "'");
}

void check_shapes(const ModelParams& p) {
  const ModelParams ref = init_params(p.config, 0);
  if (ref.tensors.size() != p.tensors.size()) throw Error("nn", "tensor count does not match the model config");
  for (std::size_t i = 0; i < ref.tensors.size(); ++i) {
    const auto& a = ref.tensors[i];
    const auto& b = p.tensors[i];
    if (a.name != b.name || a.value.rows() != b.value.rows() || a.value.cols() != b.value.cols())
      throw Error("nn", "tensor '" + b.name + "' does not match the model config (expected '" + a.name + "')");
  }
}

}  // namespace

std::string serialize_binary(const ModelParams& params) {
  std::string out(kMagic, sizeof kMagic);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(params.kind()));
  const auto cfg = config_values(params.config);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(cfg.size()));
  for (double v : cfg) put<double>(out, v);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(params.tensors.size()));
  for (const auto& t : params.tensors) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.name.size()));
    out += t.name;
    put<std::uint64_t>(out, static_cast<std::uint64_t>(t.value.rows()));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(t.value.cols()));
    for (Eigen::Index r = 0; r < t.value.rows(); ++r)
      for (Eigen::Index c = 0; c < t.value.cols(); ++c) put<double>(out, t.value(r, c));
  }
  return out;
}

ModelParams deserialize_binary(std::string_view bytes) {
  Reader in(bytes);
  if (in.take(sizeof kMagic) != std::string_view(kMagic, sizeof kMagic))
    throw Error("nn", "not a gazelens parameter file (bad magic)");
  const ModelKind kind = kind_from_int(in.get<std::uint32_t>());
  std::vector<double> cfg(in.get<std::uint32_t>());
  for (double& v : cfg) v = in.get<double>();
  ModelParams p{config_from_values(kind, cfg), {}};
  const auto n = in.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < n; ++i) {
    Tensor t;
    t.name = std::string(in.take(in.get<std::uint32_t>()));
    const auto rows = static_cast<Eigen::Index>(in.get<std::uint64_t>());
    const auto cols = static_cast<Eigen::Index>(in.get<std::uint64_t>());
    t.value.resize(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) t.value(r, c) = in.get<double>();
    p.tensors.push_back(std::move(t));
  }
  if (!in.done()) throw Error("nn", "trailing bytes in parameter file");
  check_shapes(p);
  return p;
}

std::string to_json(const ModelParams& params) {
  nlohmann::ordered_json j;
  j["kind"] = std::string(to_string(params.kind()));
  j["config"] = config_values(params.config);
  auto& tensors = j["tensors"] = nlohmann::ordered_json::array();
  for (const auto& t : params.tensors) {
    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(t.value.size()));
    for (Eigen::Index r = 0; r < t.value.rows(); ++r)
      for (Eigen::Index c = 0; c < t.value.cols(); ++c) values.push_back(t.value(r, c));
    tensors.push_back({{"name", t.name}, {"shape", {t.value.rows(), t.value.cols()}}, {"values", values}});
  }
  return j.dump(1);
}

ModelParams from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
    const ModelKind kind = kind_from_name(j.at("kind").get<std::string>());
    ModelParams p{config_from_values(kind, j.at("config").get<std::vector<double>>()), {}};
    for (const auto& jt : j.at("tensors")) {
      Tensor t;
      t.name = jt.at("name").get<std::string>();
      const auto shape = jt.at("shape").get<std::vector<Eigen::Index>>();
      const auto values = jt.at("values").get<std::vector<double>>();
      if (shape.size() != 2 || static_cast<Eigen::Index>(values.size()) != shape[0] * shape[1])
        throw Error("nn", "tensor '" + t.name + "' has inconsistent shape/values");
      t.value.resize(shape[0], shape[1]);
      std::size_t k = 0;
      for (Eigen::Index r = 0; r < shape[0]; ++r)
        for (Eigen::Index c = 0; c < shape[1]; ++c) t.value(r, c) = values[k++];
      p.tensors.push_back(std::move(t));
    }
    check_shapes(p);
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw Error("nn", std::string("malformed parameter JSON: ") + e.what());
  }
}

void save_params(const ModelParams& params, const std::filesystem::path& path) {
  text::write_file_atomic(path, serialize_binary(params));
  std::filesystem::path json_path = path;
  json_path += ".json";
  text::write_file_atomic(json_path, to_json(params));
}

ModelParams load_params(const std::filesystem::path& path) { return deserialize_binary(text::read_file(path)); }

}  // namespace gazelens::nn
