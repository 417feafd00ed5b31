#include "train/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace mf {

namespace {

constexpr char kMagic[4] = {'M', 'F', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

// x86-64 host is little-endian; raw dumps keep the stated file format.
static_assert(std::endian::native == std::endian::little,
              "checkpoint writer assumes a little-endian host");

template <typename T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T take(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw IoError("checkpoint: unexpected end of file");
  return v;
}

void put_string(std::ostream& out, const std::string& s) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string take_string(std::istream& in) {
  auto len = take<std::uint32_t>(in);
  std::string s(len, '\0');
  in.read(s.data(), len);
  if (!in) throw IoError("checkpoint: unexpected end of file");
  return s;
}

template <typename Vec>
void put_doubles(std::ostream& out, const Vec& v) {
  put<std::uint64_t>(out, static_cast<std::uint64_t>(v.size()));
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
}

std::vector<double> take_doubles(std::istream& in) {
  auto n = take<std::uint64_t>(in);
  std::vector<double> v(static_cast<std::size_t>(n));
  in.read(reinterpret_cast<char*>(v.data()),
          static_cast<std::streamsize>(n * sizeof(double)));
  if (!in) throw IoError("checkpoint: unexpected end of file");
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const TransformerModel& model,
                     const Adam* optimizer, const CheckpointMeta& meta) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");

  out.write(kMagic, 4);
  put<std::uint32_t>(out, kVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(model.kind()));

  const ModelConfig& mc = model.config();
  put<std::int32_t>(out, mc.d_model);
  put<std::int32_t>(out, mc.n_heads);
  put<std::int32_t>(out, mc.n_layers);
  put<std::int32_t>(out, mc.d_ffn);
  put<double>(out, mc.dropout);
  put<std::int32_t>(out, mc.vocab_size);
  put<std::int32_t>(out, mc.max_in);
  put<std::int32_t>(out, mc.max_out);
  put<std::int32_t>(out, mc.pad_id);

  const UTConfig& ut = model.ut_config();
  put<std::int32_t>(out, ut.fixed_steps);
  put<std::uint8_t>(out, ut.act_enabled ? 1 : 0);
  put<double>(out, ut.epsilon);
  put<std::int32_t>(out, ut.max_updates);
  put<double>(out, ut.ponder_tau);

  put<std::int64_t>(out, meta.step);
  put<std::uint64_t>(out, meta.seed);
  put<double>(out, meta.running_loss);

  const auto& entries = model.params().entries();
  put<std::uint32_t>(out, static_cast<std::uint32_t>(entries.size()));
  for (const auto& [name, t] : entries) {
    put_string(out, name);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
    for (int d : t.shape()) put<std::int32_t>(out, d);
    put_doubles(out, t.vec());
  }

  put<std::uint8_t>(out, optimizer ? 1 : 0);
  if (optimizer) {
    put<std::int64_t>(out, optimizer->step_count());
    for (const auto& m : optimizer->moments_m()) put_doubles(out, m);
    for (const auto& v : optimizer->moments_v()) put_doubles(out, v);
  }
  if (!out) throw IoError("write failed for " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);

  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw ParseError(path + ": not a checkpoint file");
  auto version = take<std::uint32_t>(in);
  if (version != kVersion)
    throw ParseError(path + ": unsupported checkpoint version " +
                     std::to_string(version));

  auto kind = static_cast<ModelKind>(take<std::uint32_t>(in));
  ModelConfig mc;
  mc.d_model = take<std::int32_t>(in);
  mc.n_heads = take<std::int32_t>(in);
  mc.n_layers = take<std::int32_t>(in);
  mc.d_ffn = take<std::int32_t>(in);
  mc.dropout = take<double>(in);
  mc.vocab_size = take<std::int32_t>(in);
  mc.max_in = take<std::int32_t>(in);
  mc.max_out = take<std::int32_t>(in);
  mc.pad_id = take<std::int32_t>(in);

  UTConfig ut;
  ut.fixed_steps = take<std::int32_t>(in);
  ut.act_enabled = take<std::uint8_t>(in) != 0;
  ut.epsilon = take<double>(in);
  ut.max_updates = take<std::int32_t>(in);
  ut.ponder_tau = take<double>(in);

  LoadedCheckpoint loaded;
  loaded.meta.step = take<std::int64_t>(in);
  loaded.meta.seed = take<std::uint64_t>(in);
  loaded.meta.running_loss = take<double>(in);

  loaded.model = std::make_unique<TransformerModel>(kind, mc, ut, loaded.meta.seed);

  auto n_params = take<std::uint32_t>(in);
  const auto& entries = loaded.model->params().entries();
  if (n_params != entries.size())
    throw ParseError(path + ": parameter count mismatch");
  for (std::size_t i = 0; i < n_params; ++i) {
    std::string name = take_string(in);
    if (name != entries[i].first)
      throw ParseError(path + ": parameter '" + name + "' where '" +
                       entries[i].first + "' was expected");
    auto rank = take<std::uint32_t>(in);
    std::vector<int> shape(rank);
    for (auto& d : shape) d = take<std::int32_t>(in);
    if (shape != entries[i].second.shape())
      throw ParseError(path + ": shape mismatch for '" + name + "'");
    std::vector<double> values = take_doubles(in);
    if (values.size() != entries[i].second.vec().size())
      throw ParseError(path + ": size mismatch for '" + name + "'");
    Tensor t = entries[i].second;
    t.vec().assign(values.begin(), values.end());
  }

  loaded.has_optimizer = take<std::uint8_t>(in) != 0;
  if (loaded.has_optimizer) {
    loaded.adam_step = take<std::int64_t>(in);
    loaded.adam_m.reserve(n_params);
    loaded.adam_v.reserve(n_params);
    for (std::size_t i = 0; i < n_params; ++i) loaded.adam_m.push_back(take_doubles(in));
    for (std::size_t i = 0; i < n_params; ++i) loaded.adam_v.push_back(take_doubles(in));
  }
  return loaded;
}

std::unique_ptr<Adam> LoadedCheckpoint::make_optimizer(const AdamConfig& cfg) const {
  if (!has_optimizer)
    throw ContractError("checkpoint carries no optimizer state");
  auto adam = std::make_unique<Adam>(model->params(), cfg);
  adam->restore(adam_step, adam_m, adam_v);
  return adam;
}

}  // namespace mf
