#include "sesmap/model_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "sesmap/error.hpp"

namespace sesmap {

namespace {

using nlohmann::json;

std::uint64_t to_little_endian(std::uint64_t bits) {
  if constexpr (std::endian::native == std::endian::big) {
    std::uint64_t out = 0;
    for (int b = 0; b < 8; ++b) out |= ((bits >> (8 * b)) & 0xFFu) << (8 * (7 - b));
    return out;
  }
  return bits;
}

void write_block(std::ofstream& out, const RowMatrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const auto bits = to_little_endian(std::bit_cast<std::uint64_t>(m(i, c)));
      char bytes[8];
      std::memcpy(bytes, &bits, 8);
      out.write(bytes, 8);
    }
  }
}

void read_block(std::ifstream& in, RowMatrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      char bytes[8];
      if (!in.read(bytes, 8)) throw Error(ErrorKind::Io, "model sidecar is truncated");
      std::uint64_t bits = 0;
      std::memcpy(&bits, bytes, 8);
      m(i, c) = std::bit_cast<double>(to_little_endian(bits));
    }
  }
}

std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd from_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

void save_model(const std::filesystem::path& manifest, const CAModel& model) {
  auto sidecar = manifest;
  sidecar.replace_extension(".bin");
  const auto k = model.k();
  const auto I = model.n_rows();
  const auto J = model.n_cols();

  json j;
  j["format"] = "sesmap-ca-model";
  j["version"] = 1;
  j["k"] = k;
  j["n_rows"] = I;
  j["n_cols"] = J;
  j["singular_values"] = to_vector(model.singular_values);
  j["row_masses"] = to_vector(model.row_masses);
  j["col_masses"] = to_vector(model.col_masses);
  j["row_ids"] = model.row_labels;
  j["col_ids"] = model.col_labels;
  j["orientation"] = {{"signs", model.orientation.signs}, {"anchor", model.orientation.anchor}};
  const auto& m = model.meta;
  j["fit_meta"] = {{"seed", m.seed},
                   {"oversampling", m.oversampling},
                   {"power_iterations", m.power_iterations},
                   {"iterations", m.iterations},
                   {"block_size", m.block_size},
                   {"tolerance", m.tolerance},
                   {"max_residual", m.max_residual},
                   {"n_rows", m.n_rows},
                   {"n_cols", m.n_cols},
                   {"nnz", m.nnz},
                   {"requested_k", m.requested_k}};
  j["coordinates"] = {
      {"file", sidecar.filename().string()},
      {"dtype", "float64"},
      {"byte_order", "little"},
      {"layout", "row-major"},
      {"blocks",
       json::array({{{"name", "row_std_coords"}, {"rows", I}, {"cols", k}, {"offset", 0}},
                    {{"name", "col_std_coords"}, {"rows", J}, {"cols", k}, {"offset", I * k * 8}}})}};

  std::ofstream bin(sidecar, std::ios::binary | std::ios::trunc);
  if (!bin) throw Error(ErrorKind::Io, "cannot write " + sidecar.string());
  write_block(bin, model.row_coords);
  write_block(bin, model.col_coords);
  bin.close();
  if (!bin) throw Error(ErrorKind::Io, "failed writing " + sidecar.string());

  std::ofstream out(manifest, std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + manifest.string());
  out << j.dump(2) << '\n';
}

CAModel load_model(const std::filesystem::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + manifest.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Io, manifest.string() + ": " + e.what());
  }
  if (j.value("format", "") != "sesmap-ca-model") {
    throw Error(ErrorKind::Io, manifest.string() + ": not a model manifest");
  }
  CAModel model;
  try {
    const auto k = j.at("k").get<Eigen::Index>();
    const auto I = j.at("n_rows").get<Eigen::Index>();
    const auto J = j.at("n_cols").get<Eigen::Index>();
    model.singular_values = from_vector(j.at("singular_values").get<std::vector<double>>());
    model.row_masses = from_vector(j.at("row_masses").get<std::vector<double>>());
    model.col_masses = from_vector(j.at("col_masses").get<std::vector<double>>());
    model.row_labels = j.at("row_ids").get<std::vector<std::string>>();
    model.col_labels = j.at("col_ids").get<std::vector<std::string>>();
    model.orientation.signs = j.at("orientation").at("signs").get<std::vector<int>>();
    model.orientation.anchor = j.at("orientation").at("anchor").get<std::string>();
    const auto& m = j.at("fit_meta");
    model.meta = FitMeta{m.at("seed").get<std::uint64_t>(),
                         m.at("oversampling").get<std::size_t>(),
                         m.at("power_iterations").get<std::size_t>(),
                         m.at("iterations").get<std::size_t>(),
                         m.at("block_size").get<std::size_t>(),
                         m.at("tolerance").get<double>(),
                         m.at("max_residual").get<double>(),
                         m.at("n_rows").get<std::size_t>(),
                         m.at("n_cols").get<std::size_t>(),
                         m.at("nnz").get<std::size_t>(),
                         m.at("requested_k").get<std::size_t>()};
    if (model.singular_values.size() != k || model.row_masses.size() != I || model.col_masses.size() != J ||
        static_cast<Eigen::Index>(model.row_labels.size()) != I ||
        static_cast<Eigen::Index>(model.col_labels.size()) != J) {
      throw Error(ErrorKind::Io, manifest.string() + ": inconsistent dimensions");
    }
    model.row_coords.resize(I, k);
    model.col_coords.resize(J, k);
    auto sidecar = manifest.parent_path() / j.at("coordinates").at("file").get<std::string>();
    std::ifstream bin(sidecar, std::ios::binary);
    if (!bin) throw Error(ErrorKind::Io, "cannot open " + sidecar.string());
    read_block(bin, model.row_coords);
    read_block(bin, model.col_coords);
    model.row_keys.resize(static_cast<std::size_t>(I));
    model.col_keys.resize(static_cast<std::size_t>(J));
    for (Eigen::Index i = 0; i < I; ++i) model.row_keys[static_cast<std::size_t>(i)] = static_cast<std::uint32_t>(i);
    for (Eigen::Index c = 0; c < J; ++c) model.col_keys[static_cast<std::size_t>(c)] = static_cast<std::uint32_t>(c);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Io, manifest.string() + ": " + e.what());
  }
  model.index_keys();
  return model;
}

}  // namespace sesmap
