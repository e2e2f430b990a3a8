#include "rfpi/field_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

namespace rfpi {

namespace {

std::filesystem::path with_suffix(const std::filesystem::path& stem, const char* ext) {
  return std::filesystem::path(stem.string() + ext);
}

void put_le(std::ofstream& out, double v) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  unsigned char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xffu);
  out.write(reinterpret_cast<const char*>(bytes), 8);
}

double get_le(const unsigned char* bytes) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= std::uint64_t(bytes[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace

std::string field_header(const SpinorField& f) {
  const Grid& g = f.grid();
  nlohmann::json h;
  h["format"] = "rfpi-spinor-field";
  h["version"] = 1;
  h["dim"] = g.dim();
  h["l"] = f.spin_dim();
  h["layout"] = "row-major grid, component fastest, little-endian float64 re,im";
  for (int a = 0; a < g.dim(); ++a) {
    h["extents"].push_back({g.lo(a), g.hi(a)});
    h["points"].push_back(g.points(a));
  }
  return h.dump(2);
}

void write_field(const std::filesystem::path& stem, const SpinorField& f) {
  {
    std::ofstream hdr(with_suffix(stem, ".json"));
    if (!hdr) throw Error("write_field: cannot open " + with_suffix(stem, ".json").string());
    hdr << field_header(f) << '\n';
  }
  std::ofstream out(with_suffix(stem, ".bin"), std::ios::binary);
  if (!out) throw Error("write_field: cannot open " + with_suffix(stem, ".bin").string());
  const Eigen::MatrixXcd& v = f.values();
  for (Eigen::Index p = 0; p < v.cols(); ++p) {
    for (Eigen::Index c = 0; c < v.rows(); ++c) {
      put_le(out, v(c, p).real());
      put_le(out, v(c, p).imag());
    }
  }
}

SpinorField read_field(const std::filesystem::path& stem) {
  std::ifstream hdr(with_suffix(stem, ".json"));
  if (!hdr) throw Error("read_field: missing header " + with_suffix(stem, ".json").string());
  nlohmann::json h;
  try {
    hdr >> h;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("read_field: malformed header: ") + e.what());
  }
  const int dim = h.at("dim").get<int>();
  const int l = h.at("l").get<int>();
  std::vector<std::pair<double, double>> extents;
  std::vector<int> points;
  for (int a = 0; a < dim; ++a) {
    extents.emplace_back(h.at("extents")[a][0].get<double>(), h.at("extents")[a][1].get<double>());
    points.push_back(h.at("points")[a].get<int>());
  }
  Grid g = make_grid(dim, extents, points);

  std::ifstream in(with_suffix(stem, ".bin"), std::ios::binary);
  if (!in) throw Error("read_field: missing payload " + with_suffix(stem, ".bin").string());
  const std::size_t expected = static_cast<std::size_t>(g.size()) * l * 16;
  std::vector<unsigned char> bytes(expected);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(expected));
  if (static_cast<std::size_t>(in.gcount()) != expected || in.peek() != std::char_traits<char>::eof())
    throw Error("read_field: payload size does not match header");

  Eigen::MatrixXcd v(l, g.size());
  std::size_t off = 0;
  for (Eigen::Index p = 0; p < g.size(); ++p) {
    for (int c = 0; c < l; ++c) {
      v(c, p) = Complex(get_le(&bytes[off]), get_le(&bytes[off + 8]));
      off += 16;
    }
  }
  SpinorField f(g, std::move(v));
  if (!f.all_finite()) throw Error("read_field: non-finite values in payload");
  return f;
}

}  // namespace rfpi
