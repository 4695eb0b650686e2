#include "nstr/param_tape.hpp"

#include <numeric>

namespace nstr {

SegmentHandle ParamTape::register_segment(const std::string& name,
                                          std::vector<int> shape,
                                          const InitSpec& init, Rng& rng) {
  if (by_name_.contains(name)) {
    throw SchemaError("duplicate tape segment name: " + name);
  }
  if (shape.empty()) {
    throw SchemaError("empty shape for tape segment: " + name);
  }
  size_t n = 1;
  for (int s : shape) {
    if (s <= 0) throw SchemaError("non-positive dim in segment: " + name);
    n *= static_cast<size_t>(s);
  }

  Segment seg;
  seg.name = name;
  seg.offset = params_.size();
  seg.size = n;
  seg.shape = std::move(shape);

  params_.resize(seg.offset + n);
  grads_.resize(seg.offset + n, 0.0);
  double* p = params_.data() + seg.offset;

  switch (init.kind) {
    case InitSpec::Kind::kConstant:
      for (size_t i = 0; i < n; ++i) p[i] = init.a;
      break;
    case InitSpec::Kind::kUniform:
      for (size_t i = 0; i < n; ++i) p[i] = rng.uniform(init.a, init.b);
      break;
    case InitSpec::Kind::kNormal:
      for (size_t i = 0; i < n; ++i) p[i] = rng.normal(init.a, init.b);
      break;
    case InitSpec::Kind::kSirenUniform: {
      const double bound = init.siren_bound();
      for (size_t i = 0; i < n; ++i) p[i] = rng.uniform(-bound, bound);
      break;
    }
  }

  by_name_[name] = static_cast<int>(segments_.size());
  segments_.push_back(std::move(seg));
  return {static_cast<int>(segments_.size()) - 1};
}

SegmentHandle ParamTape::find(const std::string& name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) return {};
  return {it->second};
}

}  // namespace nstr
