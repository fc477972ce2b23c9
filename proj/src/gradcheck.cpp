#include "fkan/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "fkan/rng.hpp"

namespace fkan {

GradCheckReport gradient_check(const Architecture& arch, const GradCheckOptions& options) {
  Rng rng(derive_seed({options.seed, 0x6c4eULL}));
  Model initial = Model::init(arch, derive_seed({options.seed, 0x1717ULL}));
  if (arch.kind == ModelKind::mlp) {
    // Zero biases put a dead layer's successors exactly on the ReLU kink.
    ParamSet p = initial.extract_params();
    for (std::size_t e = 1; e < p.entry_count(); e += 2)
      for (double& b : p.tensor(e).data()) b = rng.uniform(-0.1, 0.1);
    initial.assign_params(p);
  }
  const std::size_t classes = arch.widths.back() == 1 ? 2 : arch.widths.back();

  Matrix x(options.batch, arch.widths.front());
  for (double& v : x.data()) v = rng.normal();
  std::vector<int> labels(options.batch);
  for (int& y : labels) y = static_cast<int>(rng.index(classes));
  const Matrix targets = encode_targets(labels, arch.widths.back());

  const Model::Forward f = initial.forward(x);
  const ParamSet analytic = initial.backward(f.cache, f.probs, targets);

  Model probe = initial;
  const ParamSet numeric = finite_diff_grad(
      [&](const ParamSet& p) {
        probe.assign_params(p);
        return loss(probe.predict(x), targets, arch.task());
      },
      initial.params(), options.step);

  GradCheckReport report;
  for (std::size_t e = 0; e < analytic.entry_count(); ++e) {
    const auto& a = analytic.tensor(e).data();
    const auto& n = numeric.tensor(e).data();
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (!(std::abs(n[i]) > options.min_magnitude)) {
        ++report.skipped;
        continue;
      }
      ++report.compared;
      const double rel = std::abs(a[i] - n[i]) / std::max(std::abs(a[i]), std::abs(n[i]));
      if (!(rel <= report.max_relative_error)) {
        report.max_relative_error = rel;
        report.worst = analytic.entry(e).name + "[" + std::to_string(i) + "]";
      }
    }
  }
  report.passed = report.compared > 0 && report.max_relative_error <= options.tolerance;
  return report;
}

}  // namespace fkan
