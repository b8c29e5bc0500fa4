#include "support.hpp"

#include "mllab/error.hpp"

#include <doctest.h>

using namespace testing;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Hyperparameters noiseless(double signal_var) {
  Hyperparameters h = rbf_params(1.0, signal_var, 1.0);
  h.log_noise = -kInf;
  return h;
}

Dataset half_correlated() { return Dataset(column({0.0, std::sqrt(2.0 * std::log(2.0))}), vec({1, 1})); }

ClmlConfig clml_with(Index m, std::uint64_t seed, Index perms = 10) {
  ClmlConfig c;
  c.m = m;
  c.permutations = perms;
  c.seed = Seed{seed};
  return c;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace

TEST_CASE("conditioning on every point scores nothing") {
  const IdentityInstance inst = absolute_instance(1, 4);
  const Objective obj(ObjectiveKind::clml, inst.data, inst.spec, clml_with(inst.data.size(), 3));
  const Evaluation e = eval_objective(obj, inst.h_hat);
  CHECK(e.value == 0.0);
  CHECK(e.gradient.norm() == 0.0);
}

TEST_CASE("conditioning on nothing is the full marginal likelihood") {
  for (int k = 0; k < 4; ++k) {
    const IdentityInstance inst = absolute_instance(2, k);
    const Objective obj(ObjectiveKind::clml, inst.data, inst.spec, clml_with(0, 3));
    const Evaluation e = eval_objective(obj, inst.h_hat);
    const LmlValueGrad full = lml_value_and_gradient(inst.data, inst.h_hat, inst.spec);
    CHECK(e.value == full.value.total);
    CHECK(e.gradient == full.gradient);
    CHECK(clml_direct(obj, inst.h_hat) == doctest::Approx(full.value.total).epsilon(1e-10));
  }
}

TEST_CASE("two-point conditional likelihood by hand") {
  ClmlConfig c;
  c.m = 1;
  c.explicit_permutations = {{0, 1}};
  const Objective obj(ObjectiveKind::clml, half_correlated(), KernelSpec{}, c);
  const double v = eval_objective(obj, noiseless(1.0)).value;
  CHECK(v == doctest::Approx(-0.941764).epsilon(1e-6));
  const double first = log_marginal_likelihood(half_correlated().subset({0}), noiseless(1.0), KernelSpec{}).total;
  const double both = log_marginal_likelihood(half_correlated(), noiseless(1.0), KernelSpec{}).total;
  CHECK(v == doctest::Approx(both - first).epsilon(1e-15));
  CHECK(clml_direct(obj, noiseless(1.0)) == doctest::Approx(v).epsilon(1e-12));
}

TEST_CASE("difference of marginal likelihoods equals the conditional Gaussian") {
  for (int k = 0; k < 20; ++k) {
    const IdentityInstance inst = absolute_instance(31, k);
    const Objective obj(ObjectiveKind::clml, inst.data, inst.spec, ClmlConfig::defaults(inst.data.size(), Seed{9}));
    CHECK(rel(eval_objective(obj, inst.h_hat).value, clml_direct(obj, inst.h_hat)) <= 1e-8);
  }
}

TEST_CASE("clml defaults and permutations") {
  const ClmlConfig d = ClmlConfig::defaults(10, Seed{1});
  CHECK(d.m == 8);
  CHECK(ClmlConfig::defaults(11, Seed{1}).m == 9);
  CHECK(ClmlConfig::defaults(2, Seed{1}).m == 2);
  CHECK(d.permutations == 10);

  const IdentityInstance inst = absolute_instance(5, 2);
  const Objective a(ObjectiveKind::clml, inst.data, inst.spec, clml_with(3, 4));
  const Objective b(ObjectiveKind::clml, inst.data, inst.spec, clml_with(3, 4));
  const Objective c(ObjectiveKind::clml, inst.data, inst.spec, clml_with(3, 5));
  CHECK(a.permutations() == b.permutations());
  CHECK(a.permutations() != c.permutations());
  CHECK(eval_objective(a, inst.h_hat).value == eval_objective(b, inst.h_hat).value);

  CHECK_THROWS_AS(Objective(ObjectiveKind::clml, inst.data, inst.spec, clml_with(inst.data.size() + 1, 1)),
                  InputError);
  CHECK_THROWS_AS(Objective(ObjectiveKind::clml, inst.data, inst.spec, clml_with(1, 1, 0)), InputError);
  ClmlConfig bad = clml_with(1, 1);
  bad.explicit_permutations = {std::vector<Index>(static_cast<std::size_t>(inst.data.size()), 0)};
  CHECK_THROWS_AS(Objective(ObjectiveKind::clml, inst.data, inst.spec, bad), InputError);
}

TEST_CASE("objective gradients match finite differences") {
  for (ObjectiveKind kind : {ObjectiveKind::lml, ObjectiveKind::profiled_lml, ObjectiveKind::clml}) {
    for (int k = 0; k < 10; ++k) {
      const IdentityInstance inst = random_identity_instance(Seed{40}, k);
      const Objective obj(kind, inst.data, inst.spec, ClmlConfig::defaults(inst.data.size(), Seed{2}));
      const GradientCheck c = gradient_check_detail(obj, inst.h_hat);
      CHECK(c.max_error_hyper <= 1e-5);
      CHECK(c.max_error_weights <= 1e-3);
      CHECK(gradient_check(obj, inst.h_hat) == c.max_error);
    }
  }
}

TEST_CASE("weight decay penalizes network weights") {
  const IdentityInstance inst = absolute_instance(6, 1);
  REQUIRE(inst.h_hat.net);
  const Objective plain(ObjectiveKind::lml, inst.data, inst.spec);
  const Objective decayed(ObjectiveKind::lml, inst.data, inst.spec, {}, 0.3);
  const double w2 = inst.h_hat.net->flat().squaredNorm();
  CHECK(eval_objective(decayed, inst.h_hat).value ==
        doctest::Approx(eval_objective(plain, inst.h_hat).value - 0.15 * w2).epsilon(1e-12));
  CHECK(gradient_check_detail(decayed, inst.h_hat).max_error_weights <= 1e-3);
  CHECK_THROWS_AS(Objective(ObjectiveKind::lml, inst.data, inst.spec, {}, -1.0), InputError);
}

TEST_CASE("constant coordinates check to zero error") {
  const IdentityInstance base = absolute_instance(7, 1);
  Hyperparameters h = base.h_hat;
  h.net = NetWeights(h.net->spec());
  const Objective obj(ObjectiveKind::lml, base.data, base.spec);
  const GradientCheck c = gradient_check_detail(obj, h);
  for (Index i = Hyperparameters::kFirstWeight; i < c.error.size(); ++i) {
    CHECK(c.numeric(i) == 0.0);
    CHECK(c.error(i) < 1e-12);
  }
}

TEST_CASE("optimizer finds the scalar maximizer") {
  const Dataset d(column({0}), vec({2}));
  const Hyperparameters h0 = noiseless(1.0);
  const Objective obj(ObjectiveKind::lml, d, KernelSpec{});
  OptConfig cfg;
  cfg.fixed = fixed_mask(h0, true, false, true);
  cfg.grad_tol = 1e-9;
  const OptTrace t = optimize(obj, h0, cfg);
  CHECK(t.converged);
  CHECK(t.reason == StopReason::gradient_tol);
  CHECK(std::abs(t.final.log_signal_var - std::log(4.0)) < 1e-6);
  CHECK(t.final.log_lengthscale == h0.log_lengthscale);
  CHECK(t.final.log_noise == -kInf);
}

TEST_CASE("optimizer traces are deterministic and monotone") {
  const Dataset d = generate_synthetic(SyntheticKind::gp_sample, 40, 0.1, Seed{3});
  const Hyperparameters h0 = initial_hyperparameters(d, KernelSpec{}, NoiseMode::absolute, std::nullopt, Seed{3});
  const Objective obj(ObjectiveKind::lml, d, KernelSpec{});
  OptConfig cfg;
  cfg.max_iters = 60;
  const OptTrace a = optimize(obj, h0, cfg);
  const OptTrace b = optimize(obj, h0, cfg);
  REQUIRE(a.iterations.size() == b.iterations.size());
  for (std::size_t i = 0; i < a.iterations.size(); ++i) {
    CHECK(a.iterations[i].theta == b.iterations[i].theta);
    CHECK(a.iterations[i].value == b.iterations[i].value);
    CHECK(a.iterations[i].step == b.iterations[i].step);
  }
  for (std::size_t i = 1; i < a.iterations.size(); ++i) {
    CHECK(a.iterations[i].value >= a.iterations[i - 1].value);
    CHECK(std::isfinite(a.iterations[i].value));
  }
  CHECK(a.iterations.front().step == 0.0);
  CHECK(a.iterations.back().value > a.iterations.front().value);
}

TEST_CASE("optimizer budgets and stop reasons") {
  const Dataset d = generate_synthetic(SyntheticKind::sine, 20, 0.1, Seed{1});
  const Hyperparameters h0 = initial_hyperparameters(d, KernelSpec{}, NoiseMode::absolute, std::nullopt, Seed{1});
  const Objective obj(ObjectiveKind::lml, d, KernelSpec{});

  OptConfig none;
  none.max_iters = 0;
  const OptTrace z = optimize(obj, h0, none);
  CHECK(z.iterations.size() == 1);
  CHECK(z.reason == StopReason::max_iters);
  CHECK(z.final.to_vector() == h0.to_vector());

  OptConfig tight;
  tight.grad_tol = 0.0;
  tight.max_iters = 100000;
  const OptTrace t = optimize(obj, h0, tight);
  CHECK(t.reason == StopReason::line_search_failure);
  CHECK_FALSE(t.converged);

  OptConfig frozen;
  frozen.fixed = fixed_mask(h0, true, false, false);
  frozen.max_iters = 20;
  const OptTrace f = optimize(obj, h0, frozen);
  for (const OptIterate& it : f.iterations) CHECK(it.theta(0) == h0.log_lengthscale);

  OptConfig bad;
  bad.fixed = {true};
  CHECK_THROWS_AS(optimize(obj, h0, bad), DimensionMismatch);
}

TEST_CASE("scale-aware initialization") {
  const Dataset d(column({0.0, 1.0, 3.0}), vec({1.0, 2.0, 6.0}));
  const Hyperparameters a = initial_hyperparameters(d, KernelSpec{}, NoiseMode::absolute, std::nullopt, Seed{0});
  const double var = (14.0 / 3.0);
  CHECK(a.lengthscale() == doctest::Approx(2.0));
  CHECK(a.signal_var() == doctest::Approx(var));
  CHECK(a.noise_variance() == doctest::Approx(0.1 * var));
  const Hyperparameters r = initial_hyperparameters(d, KernelSpec{}, NoiseMode::ratio, std::nullopt, Seed{0});
  CHECK(std::exp(r.log_noise) == doctest::Approx(0.1));

  const Dataset flat(column({2.0, 2.0}), vec({0.0, 0.0}));
  const Hyperparameters f = initial_hyperparameters(flat, KernelSpec{}, NoiseMode::absolute, std::nullopt, Seed{0});
  CHECK(f.lengthscale() == 1.0);
  CHECK(f.signal_var() == 1.0);

  CHECK_THROWS_AS(initial_hyperparameters(d, KernelSpec{KernelFamily::deep_rbf}, NoiseMode::absolute, std::nullopt,
                                          Seed{0}),
                  MissingNetwork);
  const Hyperparameters deep = initial_hyperparameters(d, KernelSpec{KernelFamily::deep_rbf}, NoiseMode::absolute,
                                                       NetSpec::mlp(1, {4}, 2), Seed{5});
  CHECK(deep.net->flat() == net_init(NetSpec::mlp(1, {4}, 2), Seed{5}).flat());
}
