#include "stylo/model_io.hpp"

#include <fstream>
#include <stdexcept>

#include "stylo/binio.hpp"

namespace stylo {

namespace {
constexpr char kMagic[4] = {'S', 'T', 'Y', 'M'};
constexpr std::uint8_t kVersion = 1;
}  // namespace

void save_scaling(std::ostream& out, const FeatureScaling& s) {
  binio::write_u32(out, kStyleDim);
  for (double v : s.lo) binio::write_f64(out, v);
  for (double v : s.hi) binio::write_f64(out, v);
}

FeatureScaling load_scaling(std::istream& in) {
  const std::uint32_t dim = binio::read_u32(in);
  if (dim != kStyleDim) {
    throw std::runtime_error("model file: feature dimension mismatch");
  }
  FeatureScaling s;
  for (double& v : s.lo) v = binio::read_f64(in);
  for (double& v : s.hi) v = binio::read_f64(in);
  return s;
}

void save_model(const std::string& path, const ModelBundle& bundle) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open model file for write: " + path);
  out.write(kMagic, sizeof(kMagic));
  binio::write_u8(out, kVersion);
  bundle.lm.save(out);
  save_scaling(out, bundle.scaling);
  bundle.tfidf.save(out);
  bundle.regressor.save(out);
  if (!out) throw std::runtime_error("write failed: " + path);
}

ModelBundle load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open model file: " + path);
  char magic[4] = {};
  in.read(magic, sizeof(magic));
  if (!in || std::string_view(magic, 4) != std::string_view(kMagic, 4)) {
    throw std::runtime_error("model file: bad magic: " + path);
  }
  const std::uint8_t version = binio::read_u8(in);
  if (version != kVersion) {
    throw std::runtime_error("model file: unsupported version");
  }
  ModelBundle bundle;
  bundle.lm = NgramModel::load(in);
  bundle.scaling = load_scaling(in);
  bundle.tfidf = TfidfModel::load(in);
  bundle.regressor = RegressorParams::load(in);
  return bundle;
}

}  // namespace stylo
