#pragma once

#include <iosfwd>
#include <string>

#include "stylo/energy.hpp"
#include "stylo/future_regressor.hpp"
#include "stylo/ngram_lm.hpp"
#include "stylo/style_encoder.hpp"

namespace stylo {

// Everything `train` produces and the other commands consume, in one file.
struct ModelBundle {
  NgramModel lm;
  FeatureScaling scaling;
  TfidfModel tfidf;
  RegressorParams regressor;
};

void save_scaling(std::ostream& out, const FeatureScaling& s);
FeatureScaling load_scaling(std::istream& in);

// Binary container: "STYM" magic, version byte, then the four sections in a
// fixed order. Serialization is canonical, so identical bundles are
// byte-identical files.
void save_model(const std::string& path, const ModelBundle& bundle);
ModelBundle load_model(const std::string& path);

}  // namespace stylo
