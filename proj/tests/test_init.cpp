#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "steinglm/glm.hpp"
#include "steinglm/init.hpp"
#include "steinglm/train.hpp"

using namespace steinglm;

namespace {

DenseMatrix random_matrix(std::size_t r, std::size_t c, Rng& rng) {
  DenseMatrix m(r, c);
  for (double& v : m.data) v = rng.gaussian();
  return m;
}

double sample_variance(const DenseMatrix& m) {
  double mean = 0.0;
  for (double v : m.data) mean += v;
  mean /= static_cast<double>(m.data.size());
  double var = 0.0;
  for (double v : m.data) var += (v - mean) * (v - mean);
  return var / static_cast<double>(m.data.size() - 1);
}

// Test-only determinant via Gaussian elimination with partial pivoting.
double det_oracle(DenseMatrix a) {
  double det = 1.0;
  const std::size_t n = a.rows;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a(r, c)) > std::abs(a(piv, c))) piv = r;
    if (piv != c) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a(c, j), a(piv, j));
      det = -det;
    }
    det *= a(c, c);
    if (a(c, c) == 0.0) return 0.0;
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a(r, c) / a(c, c);
      for (std::size_t j = c; j < n; ++j) a(r, j) -= f * a(c, j);
    }
  }
  return det;
}

double angle_deg(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double c = std::abs(dot) / std::sqrt(na * nb);
  return std::acos(std::min(1.0, c)) * 180.0 / 3.14159265358979323846;
}

}  // namespace

TEST_CASE("score2_cross_moment: zero response gives the zero matrix") {
  Rng rng(1);
  const DenseMatrix h = random_matrix(20, 4, rng);
  const DenseMatrix sigma = score2_cross_moment(h, std::vector<double>(20, 0.0));
  CHECK(frobenius_norm(sigma) == 0.0);
}

TEST_CASE("score2_cross_moment: S2(0) = -I") {
  const DenseMatrix h(1, 3, 0.0);
  const DenseMatrix sigma = score2_cross_moment(h, {1.0});
  DenseMatrix expect = DenseMatrix::identity(3);
  for (double& v : expect.data) v = -v;
  CHECK(max_abs_diff(sigma, expect) == 0.0);
}

TEST_CASE("score2_cross_moment: exactly symmetric, permutation invariant") {
  Rng rng(5);
  const DenseMatrix h = random_matrix(50, 6, rng);
  std::vector<double> y(50);
  for (double& v : y) v = rng.gaussian();
  const DenseMatrix sigma = score2_cross_moment(h, y);
  for (std::size_t a = 0; a < 6; ++a)
    for (std::size_t b = 0; b < 6; ++b) CHECK(sigma(a, b) == sigma(b, a));

  std::vector<std::size_t> perm(50);
  for (std::size_t i = 0; i < 50; ++i) perm[i] = 49 - i;
  const DenseMatrix sigma_p = score2_cross_moment(take_rows(h, perm), take(y, perm));
  CHECK(max_abs_diff(sigma, sigma_p) < 1e-12);
}

TEST_CASE("score2_cross_moment: Monte-Carlo oracle of the population identity") {
  // y = (beta^T x)^2 under x ~ N(0, I) has E[y S2(x)] = 2 beta beta^T.
  const std::size_t n = 200000, d = 6;
  Rng rng(99);
  std::vector<double> beta(d, 0.0);
  beta[1] = 0.8;
  beta[4] = -0.6;  // unit vector
  DenseMatrix x(n, d);
  for (double& v : x.data) v = rng.gaussian();
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    double p = 0.0;
    for (std::size_t j = 0; j < d; ++j) p += x(i, j) * beta[j];
    y[i] = p * p;
  }
  const SteinDecomposition dec = stein_decompose(x, y);
  CHECK(dec.eigenvalues[0] == doctest::Approx(2.0).epsilon(0.05));
  for (std::size_t j = 1; j < d; ++j) CHECK(std::abs(dec.eigenvalues[j]) < 0.2);

  std::vector<double> lead(d);
  for (std::size_t i = 0; i < d; ++i) lead[i] = dec.eigenvectors(i, 0);
  CHECK(angle_deg(lead, beta) < 2.0);
}

TEST_CASE("stein_layer_init: zero-mean activations give exactly zero bias") {
  DenseMatrix h(4, 2);
  h(0, 0) = 1.0;
  h(1, 0) = -1.0;
  h(2, 0) = 2.0;
  h(3, 0) = -2.0;
  h(0, 1) = 0.5;
  h(1, 1) = -0.5;
  h(2, 1) = 1.5;
  h(3, 1) = -1.5;
  const LayerInit li = stein_layer_init(h, {1.0, 1.0, 2.0, 2.0}, 2, 1.0);
  // Columns have zero mean only pairwise-cancelling under these y... compute
  // directly: bias must equal -W^T mean(h), and mean(h) here is 0.
  CHECK(li.bias[0] == 0.0);
  CHECK(li.bias[1] == 0.0);
}

TEST_CASE("stein_layer_init: full eigenbasis is orthogonal, scaled by alpha") {
  Rng rng(13);
  const DenseMatrix h = random_matrix(300, 5, rng);
  std::vector<double> y(300);
  for (std::size_t i = 0; i < 300; ++i) y[i] = h(i, 0) * h(i, 0) - h(i, 2);

  for (double alpha : {1.0, 4.0}) {
    const LayerInit li = stein_layer_init(h, y, 5, alpha);
    DenseMatrix gram = matmul(transpose(li.weights), li.weights);
    for (std::size_t i = 0; i < 5; ++i) gram(i, i) -= alpha * alpha;
    CHECK(frobenius_norm(gram) < 1e-8);
  }
}

TEST_CASE("stein_layer_init: mean pre-activation is zero within 1e-10") {
  Rng rng(19);
  DenseMatrix h = random_matrix(400, 6, rng);
  for (double& v : h.data) v += 0.7;  // deliberately off-center
  std::vector<double> y(400);
  for (std::size_t i = 0; i < 400; ++i) y[i] = h(i, 1) * h(i, 1);

  const LayerInit li = stein_layer_init(h, y, 3, 1.0);
  const std::vector<double> mu = col_means(h);
  for (std::size_t j = 0; j < 3; ++j) {
    double mean_a = li.bias[j];
    for (std::size_t i = 0; i < 6; ++i) mean_a += li.weights(i, j) * mu[i];
    CHECK(std::abs(mean_a) < 1e-10);
  }
}

TEST_CASE("stein_layer_init: planted subspace recovery within 5 degrees") {
  const MultiIndexData data = make_multi_index_data(10, 3, 100000, 4242, {3.0, 2.0, 1.0});
  const LayerInit li = stein_layer_init(data.x, data.y, 3, 1.0);
  CHECK(largest_principal_angle_deg(li.weights, data.planted_b) < 5.0);
}

TEST_CASE("stein_layer_init: errors") {
  Rng rng(23);
  const DenseMatrix h = random_matrix(50, 3, rng);
  std::vector<double> y(50, 0.0);
  CHECK_THROWS_WITH_AS(stein_layer_init(h, y, 4, 1.0),
                       doctest::Contains("exceeds available eigenvectors"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(stein_layer_init(h, y, 2, 1.0), doctest::Contains("degenerate"),
                       std::runtime_error);
}

TEST_CASE("stein_layer_init: fill mode completes degenerate signal ranks") {
  // Signal concentrated on one direction; ask for 3 columns with fill.
  Rng rng(29);
  DenseMatrix x = random_matrix(5000, 4, rng);
  std::vector<double> y(5000);
  for (std::size_t i = 0; i < 5000; ++i) y[i] = x(i, 0) * x(i, 0);
  const LayerInit li = stein_layer_init(x, y, 3, 1.0, /*allow_fill=*/true, /*fill_seed=*/7);
  DenseMatrix gram = matmul(transpose(li.weights), li.weights);
  for (std::size_t i = 0; i < 3; ++i) gram(i, i) -= 1.0;
  CHECK(frobenius_norm(gram) < 1e-8);
}

TEST_CASE("scaling_factor: tanh and sigmoid factors follow the slope rule") {
  CHECK(scaling_factor(Activation::Tanh) == 1.0);
  CHECK(scaling_factor(Activation::Sigmoid) == 4.0);
  CHECK_THROWS_AS(scaling_factor(Activation::Identity), std::invalid_argument);
  // General rule 1 / f'(0): a slope-0.5 activation would get factor 2.
  CHECK(1.0 / 0.5 == 2.0);
  CHECK(scaling_factor(Activation::Sigmoid) == 1.0 / slope_at_zero(Activation::Sigmoid));
  CHECK(scaling_factor(Activation::Tanh) == 1.0 / slope_at_zero(Activation::Tanh));
}

TEST_CASE("first_order_index: coordinate and general directions") {
  Rng rng(31);
  const std::size_t n = 100000, d = 5;
  DenseMatrix x(n, d);
  for (double& v : x.data) v = rng.gaussian();

  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = x(i, 0);
  std::vector<double> e1(d, 0.0);
  e1[0] = 1.0;
  CHECK(angle_deg(first_order_index(x, y), e1) < 2.0);

  std::vector<double> beta(d, 0.0);
  beta[1] = 0.6;
  beta[3] = 0.8;
  for (std::size_t i = 0; i < n; ++i) {
    double p = 0.0;
    for (std::size_t j = 0; j < d; ++j) p += x(i, j) * beta[j];
    y[i] = 3.0 * p;
  }
  CHECK(angle_deg(first_order_index(x, y), beta) < 2.0);

  CHECK_THROWS_WITH_AS(first_order_index(x, std::vector<double>(n, 0.0)),
                       doctest::Contains("no direction"), std::runtime_error);
}

TEST_CASE("glorot_normal / he_normal: determinism, truncation bound, variance") {
  Rng a(77), b(77);
  const DenseMatrix w1 = glorot_normal(100, 100, a);
  const DenseMatrix w2 = glorot_normal(100, 100, b);
  CHECK(w1.data == w2.data);  // bit-identical under the same seed

  // Pre-rescaling draws are truncated at 2 nominal std-devs; the variance
  // rescale divides by 0.8796..., so that is the bound on the raw draws.
  const double bound = 2.0 * std::sqrt(2.0 / 200.0);
  for (double v : w1.data) CHECK(std::abs(v) * 0.87962566103423978 <= bound + 1e-15);

  const double target = 2.0 / 200.0;
  CHECK(std::abs(sample_variance(w1) - target) / target < 0.15);

  Rng c(78);
  const DenseMatrix wh = he_normal(100, 80, c);
  const double he_target = 2.0 / 100.0;
  CHECK(std::abs(sample_variance(wh) - he_target) / he_target < 0.15);
  double mean = 0.0;
  for (double v : wh.data) mean += v;
  mean /= static_cast<double>(wh.data.size());
  const double se = std::sqrt(he_target / static_cast<double>(wh.data.size()));
  CHECK(std::abs(mean) < 5.0 * se);
}

TEST_CASE("orthogonal_init: orthonormal columns, |det| = 1 square, deterministic") {
  Rng a(5), b(5);
  const DenseMatrix q = orthogonal_init(20, 5, a);
  CHECK(max_abs_diff(matmul(transpose(q), q), DenseMatrix::identity(5)) < 1e-10);

  Rng a2(5);
  const DenseMatrix q2 = orthogonal_init(20, 5, a2);
  CHECK(q.data == q2.data);

  const DenseMatrix sq = orthogonal_init(6, 6, b);
  CHECK(std::abs(std::abs(det_oracle(sq)) - 1.0) < 1e-10);

  CHECK_THROWS_AS(orthogonal_init(3, 5, b), std::invalid_argument);
}

TEST_CASE("init_network: ablation arm wiring") {
  const MultiIndexData data = make_multi_index_data(6, 2, 4000, 11, {2.0, 1.0});
  // Scale y into [0,1]-ish range for a GLM fit that behaves like the harness.
  std::vector<double> y = data.y;
  double hi = 0.0;
  for (double v : y) hi = std::max(hi, v);
  for (double& v : y) v /= hi;

  const std::size_t n_tr = 3000;
  DenseMatrix x_tr(n_tr, 6), x_val(1000, 6);
  std::vector<double> y_tr(n_tr), y_val(1000);
  for (std::size_t i = 0; i < 4000; ++i)
    for (std::size_t j = 0; j < 6; ++j) {
      if (i < n_tr)
        x_tr(i, j) = data.x(i, j);
      else
        x_val(i - n_tr, j) = data.x(i, j);
    }
  for (std::size_t i = 0; i < 4000; ++i)
    (i < n_tr ? y_tr[i] : y_val[i - n_tr]) = y[i];

  Architecture arch;
  arch.input_dim = 6;
  arch.hidden_widths = {4, 4};
  arch.hidden_activation = Activation::Tanh;
  arch.output_activation = Activation::Identity;
  const InitData idata{x_tr, y_tr, x_val, y_val, Task::Regression};

  SUBCASE("(he, same-as-hidden): biases all exactly zero") {
    InitScheme scheme;
    scheme.hidden = HiddenInit::HeNormal;
    scheme.output = OutputInit::SameAsHidden;
    Rng rng(3);
    const NetworkParams p = init_network(arch, scheme, idata, rng);
    for (const auto& b : p.biases)
      for (double v : b) CHECK(v == 0.0);
    CHECK(p.output_bias == 0.0);
  }

  SUBCASE("(glorot, glm): output layer equals the GLM fit on propagated features") {
    InitScheme scheme;
    scheme.hidden = HiddenInit::GlorotNormal;
    scheme.output = OutputInit::Glm;
    Rng rng(4);
    const NetworkParams p = init_network(arch, scheme, idata, rng);

    const DenseMatrix h_tr =
        propagate_hidden(p.weights, p.biases, x_tr, arch.hidden_activation);
    const DenseMatrix h_val =
        propagate_hidden(p.weights, p.biases, x_val, arch.hidden_activation);
    const GlmFit fit =
        grid_search(h_tr, y_tr, h_val, y_val, scheme.lambda_grid, Task::Regression);
    for (std::size_t j = 0; j < 4; ++j)
      CHECK(p.output_weights(j, 0) == doctest::Approx(fit.weights[j]).epsilon(1e-12));
    CHECK(p.output_bias == doctest::Approx(fit.intercept).epsilon(1e-12));
  }

  SUBCASE("(stein, same-as-hidden): no GLM, orthogonal hidden weights") {
    InitScheme scheme;
    scheme.hidden = HiddenInit::Stein;
    scheme.output = OutputInit::SameAsHidden;
    Rng rng(5);
    const NetworkParams p = init_network(arch, scheme, idata, rng);
    for (const auto& w : p.weights) {
      DenseMatrix gram = matmul(transpose(w), w);
      for (std::size_t i = 0; i < gram.rows; ++i) gram(i, i) -= 1.0;  // tanh alpha = 1
      CHECK(frobenius_norm(gram) < 1e-8);
    }
    CHECK(p.output_weights.rows == 4);
  }
}

TEST_CASE("stein_glm_init: full pipeline contracts on planted data") {
  const MultiIndexData data = make_multi_index_data(8, 3, 6000, 21, {3.0, 2.0, 1.0});
  std::vector<double> y = data.y;
  double hi = 0.0;
  for (double v : y) hi = std::max(hi, v);
  for (double& v : y) v /= hi;

  DenseMatrix x_tr(5000, 8), x_val(1000, 8);
  std::vector<double> y_tr(5000), y_val(1000);
  for (std::size_t i = 0; i < 6000; ++i) {
    for (std::size_t j = 0; j < 8; ++j)
      (i < 5000 ? x_tr(i, j) : x_val(i - 5000, j)) = data.x(i, j);
    (i < 5000 ? y_tr[i] : y_val[i - 5000]) = y[i];
  }

  Architecture arch;
  arch.input_dim = 8;
  arch.hidden_widths = {8, 6};
  arch.hidden_activation = Activation::Tanh;
  arch.output_activation = Activation::Identity;

  const InitData idata{x_tr, y_tr, x_val, y_val, Task::Regression};
  const NetworkParams p = stein_glm_init(idata, arch, InitScheme{});

  // Layer 1 with width = d is an orthogonal matrix up to alpha, and the mean
  // pre-activation is zero.
  DenseMatrix gram = matmul(transpose(p.weights[0]), p.weights[0]);
  for (std::size_t i = 0; i < 8; ++i) gram(i, i) -= 1.0;
  CHECK(frobenius_norm(gram) < 1e-8);

  const std::vector<double> mu = col_means(x_tr);
  for (std::size_t j = 0; j < 8; ++j) {
    double mean_a = p.biases[0][j];
    for (std::size_t i = 0; i < 8; ++i) mean_a += p.weights[0](i, j) * mu[i];
    CHECK(std::abs(mean_a) < 1e-10);
  }
}

TEST_CASE("stein_glm_init: degenerate propagation names the layer") {
  // Identical input rows make every pre-activation constant across samples,
  // so layer 1's activations collapse.
  DenseMatrix x(200, 4, 0.0);
  std::vector<double> y(200);
  for (std::size_t i = 0; i < 200; ++i) {
    x(i, 0) = 1.0;
    x(i, 1) = 2.0;
    y[i] = (i % 2 == 0) ? 1.0 : 2.0;
  }
  Rng rng(33);
  DenseMatrix x_val = random_matrix(50, 4, rng);
  std::vector<double> y_val(50, 0.5);

  Architecture arch;
  arch.input_dim = 4;
  arch.hidden_widths = {4};
  const InitData idata{x, y, x_val, y_val, Task::Regression};
  CHECK_THROWS_WITH_AS(stein_glm_init(idata, arch, InitScheme{}),
                       doctest::Contains("hidden layer 1"), std::runtime_error);
}

TEST_CASE("subspace recovery sharpens with sample size") {
  // Median largest principal angle over 10 seeds, monotone non-increasing
  // across n = 1e3, 1e4, 1e5.
  std::vector<double> medians;
  for (std::size_t n : {1000u, 10000u, 100000u}) {
    std::vector<double> angles;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const MultiIndexData data = make_multi_index_data(10, 3, n, 1000 + seed, {3.0, 2.0, 1.0});
      const LayerInit li = stein_layer_init(data.x, data.y, 3, 1.0);
      angles.push_back(largest_principal_angle_deg(li.weights, data.planted_b));
    }
    std::sort(angles.begin(), angles.end());
    medians.push_back(0.5 * (angles[4] + angles[5]));
  }
  CHECK(medians[1] <= medians[0]);
  CHECK(medians[2] <= medians[1]);
}

TEST_CASE("stein first-epoch loss beats glorot on a planted model, 5 seeds") {
  double stein_sum = 0.0, glorot_sum = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const MultiIndexData data = make_multi_index_data(8, 3, 3000, 500 + seed, {3.0, 2.0, 1.0});
    std::vector<double> y = data.y;
    double hi = 0.0;
    for (double v : y) hi = std::max(hi, v);
    for (double& v : y) v /= hi;

    DenseMatrix x_tr(2400, 8), x_val(600, 8);
    std::vector<double> y_tr(2400), y_val(600);
    for (std::size_t i = 0; i < 3000; ++i) {
      for (std::size_t j = 0; j < 8; ++j)
        (i < 2400 ? x_tr(i, j) : x_val(i - 2400, j)) = data.x(i, j);
      (i < 2400 ? y_tr[i] : y_val[i - 2400]) = y[i];
    }

    Architecture arch;
    arch.input_dim = 8;
    arch.hidden_widths = {6, 6};
    const InitData idata{x_tr, y_tr, x_val, y_val, Task::Regression};
    const TrainData tdata{x_tr, y_tr, x_val, y_val, Task::Regression};

    TrainConfig tc;
    tc.max_epochs = 1;
    tc.batch_size = 256;
    tc.seed = seed;

    InitScheme stein_scheme;  // stein + glm
    Rng r1(seed);
    const TrainedModel ms =
        train(init_network(arch, stein_scheme, idata, r1), tdata, arch, tc);
    stein_sum += ms.trajectory[0].train_loss;

    InitScheme glorot_scheme;
    glorot_scheme.hidden = HiddenInit::GlorotNormal;
    glorot_scheme.output = OutputInit::SameAsHidden;
    Rng r2(seed);
    const TrainedModel mg =
        train(init_network(arch, glorot_scheme, idata, r2), tdata, arch, tc);
    glorot_sum += mg.trajectory[0].train_loss;
  }
  CHECK(stein_sum / 5.0 < glorot_sum / 5.0);
}
