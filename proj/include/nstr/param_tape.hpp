#pragma once

#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "nstr/common.hpp"
#include "nstr/rng.hpp"

namespace nstr {

// How a freshly registered segment is filled.
struct InitSpec {
  enum class Kind { kConstant, kUniform, kNormal, kSirenUniform };

  Kind kind = Kind::kConstant;
  double a = 0.0;  // constant value / uniform lo / normal mean
  double b = 0.0;  // uniform hi / normal stddev
  int fan_in = 0;
  double omega0 = 30.0;
  bool first_layer = false;

  static InitSpec constant(double v) { return {Kind::kConstant, v, 0.0}; }
  static InitSpec uniform(double lo, double hi) { return {Kind::kUniform, lo, hi}; }
  static InitSpec normal(double mean, double stddev) { return {Kind::kNormal, mean, stddev}; }
  static InitSpec siren_uniform(int fan_in, double omega0, bool first_layer) {
    InitSpec s{Kind::kSirenUniform, 0.0, 0.0};
    s.fan_in = fan_in;
    s.omega0 = omega0;
    s.first_layer = first_layer;
    return s;
  }

  // Analytic bound of the SIREN scheme: 1/fan_in for the first layer,
  // sqrt(6/fan_in)/omega0 for deeper layers.
  double siren_bound() const {
    if (first_layer) return 1.0 / static_cast<double>(fan_in);
    return std::sqrt(6.0 / static_cast<double>(fan_in)) / omega0;
  }
};

struct SegmentHandle {
  int index = -1;
  bool valid() const { return index >= 0; }
};

// Flat parameter + gradient store shared by every trainable component of a
// model. Segments are appended once at construction and never move.
class ParamTape {
 public:
  struct Segment {
    std::string name;
    size_t offset = 0;
    size_t size = 0;
    std::vector<int> shape;
  };

  SegmentHandle register_segment(const std::string& name, std::vector<int> shape,
                                 const InitSpec& init, Rng& rng);

  size_t size() const { return params_.size(); }
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }
  std::vector<double>& grads() { return grads_; }
  const std::vector<double>& grads() const { return grads_; }

  void zero_grads() { std::fill(grads_.begin(), grads_.end(), 0.0); }

  const std::vector<Segment>& segments() const { return segments_; }
  const Segment& segment(SegmentHandle h) const { return segments_.at(h.index); }
  SegmentHandle find(const std::string& name) const;

  std::span<double> param_span(SegmentHandle h) {
    const Segment& s = segments_.at(h.index);
    return {params_.data() + s.offset, s.size};
  }
  std::span<const double> param_span(SegmentHandle h) const {
    const Segment& s = segments_.at(h.index);
    return {params_.data() + s.offset, s.size};
  }
  std::span<double> grad_span(SegmentHandle h) {
    const Segment& s = segments_.at(h.index);
    return {grads_.data() + s.offset, s.size};
  }

 private:
  std::vector<double> params_;
  std::vector<double> grads_;
  std::vector<Segment> segments_;
  std::unordered_map<std::string, int> by_name_;
};

}  // namespace nstr
