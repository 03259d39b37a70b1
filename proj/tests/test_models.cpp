#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include "statenet/diff/checkpoint.hpp"
#include "statenet/diff/gru.hpp"
#include "statenet/diff/loss.hpp"
#include "statenet/diff/ops.hpp"
#include "statenet/models/baselines.hpp"
#include "statenet/models/statenet.hpp"
#include "statenet/models/zoo.hpp"
#include "test_util.hpp"

using namespace statenet;
using statenet::testing::random_matrix;
using statenet::testing::random_signal;
using statenet::testing::toy_spec;
namespace fs = std::filesystem;

namespace {

Vector<double> vec(std::initializer_list<double> v) {
  Vector<double> out(static_cast<Index>(v.size()));
  std::copy(v.begin(), v.end(), out.data());
  return out;
}

// Direct sum over taps, out-of-range samples read as zero.
Vector<double> conv_oracle(const Vector<double>& x, const Vector<double>& w, Index d, double bias) {
  const Index k = w.size();
  Vector<double> y = Vector<double>::Constant(x.size(), bias);
  for (Index t = 0; t < x.size(); ++t) {
    for (Index j = 0; j < k; ++j) {
      const Index src = t - (k - 1 - j) * d;
      if (src >= 0) y(t) += w(j) * x(src);
    }
  }
  return y;
}

double logistic(double v) { return 1.0 / (1.0 + std::exp(-v)); }

// One GRU cell step written out gate by gate.
Vector<double> gru_cell(const Vector<double>& x, const Vector<double>& h, const Matrix<double>& wi,
                        const Matrix<double>& wh, const Matrix<double>& b) {
  const Index n = h.size();
  const Vector<double> gi = wi * x + b.col(0);
  Vector<double> z(n), r(n), c(n), out(n);
  for (Index i = 0; i < n; ++i) {
    z(i) = logistic(gi(i) + wh.row(i).dot(h));
    r(i) = logistic(gi(n + i) + wh.row(n + i).dot(h));
  }
  const Vector<double> rh = r.cwiseProduct(h);
  for (Index i = 0; i < n; ++i) {
    c(i) = std::tanh(gi(2 * n + i) + wh.row(2 * n + i).dot(rh));
    out(i) = z(i) * h(i) + (1.0 - z(i)) * c(i);
  }
  return out;
}

Signal<double> permute_rows(const Signal<double>& x, const std::vector<Index>& perm) {
  Signal<double> out(x.rows(), x.cols());
  for (Index i = 0; i < x.rows(); ++i) out.row(i) = x.row(perm[static_cast<std::size_t>(i)]);
  return out;
}

// Row-softmax of Z Z^T with Z = M W^T, then A Z, recomputed from scratch.
Matrix<double> gat_oracle(const Matrix<double>& m, const Matrix<double>& w) {
  const Index c = m.rows();
  std::vector<Vector<double>> z;
  for (Index i = 0; i < c; ++i) z.push_back(w * m.row(i).transpose());
  Matrix<double> out = Matrix<double>::Zero(c, w.rows());
  for (Index i = 0; i < c; ++i) {
    std::vector<double> s;
    for (Index k = 0; k < c; ++k) s.push_back(z[i].dot(z[k]));
    const double top = *std::max_element(s.begin(), s.end());
    double total = 0;
    for (auto& v : s) total += (v = std::exp(v - top));
    for (Index k = 0; k < c; ++k) out.row(i) += (s[k] / total) * z[k].transpose();
  }
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void zero_params(diff::ParamSet<double>& p) {
  for (auto& t : p) t.value.setZero();
}

}  // namespace

TEST_CASE("dilated_conv1d examples") {
  const auto x = vec({1, 2, 3, 4});
  CHECK(diff::dilated_conv1d<double>(x, vec({1}), 1, 0.0) == vec({1, 2, 3, 4}));
  CHECK(diff::dilated_conv1d<double>(x, vec({1, 1}), 1, 0.0) == vec({1, 3, 5, 7}));
  CHECK(diff::dilated_conv1d<double>(x, vec({1, 0}), 2, 0.0) == vec({0, 0, 1, 2}));
  CHECK_THROWS_AS(diff::dilated_conv1d<double>(x, Vector<double>(), 1, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(diff::dilated_conv1d<double>(x, vec({1}), 0, 0.0), std::invalid_argument);
}

TEST_CASE("dilated_conv1d matches the tap-sum oracle and is linear") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const Index len = 1 + static_cast<Index>(rng() % 40);
    const Index k = 1 + static_cast<Index>(rng() % 4);
    const Index d = 1 + static_cast<Index>(rng() % 5);
    const Vector<double> x = random_matrix(len, 1, rng);
    const Vector<double> z = random_matrix(len, 1, rng);
    const Vector<double> w = random_matrix(k, 1, rng);
    const Vector<double> v = random_matrix(k, 1, rng);
    const double b = 0.3;
    CHECK((diff::dilated_conv1d<double>(x, w, d, b) - conv_oracle(x, w, d, b)).cwiseAbs().maxCoeff() <= 1e-12);
    // Linear in x and in w (bias zero).
    const double a1 = 1.7, a2 = -0.4;
    const Vector<double> lhs = diff::dilated_conv1d<double>(a1 * x + a2 * z, w, d, 0.0);
    const Vector<double> rhs = a1 * diff::dilated_conv1d<double>(x, w, d, 0.0) +
                               a2 * diff::dilated_conv1d<double>(z, w, d, 0.0);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-12);
    const Vector<double> lw = diff::dilated_conv1d<double>(x, a1 * w + a2 * v, d, 0.0);
    const Vector<double> rw = a1 * diff::dilated_conv1d<double>(x, w, d, 0.0) +
                              a2 * diff::dilated_conv1d<double>(x, v, d, 0.0);
    CHECK((lw - rw).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("causal_conv on segments agrees with the single-channel convolution") {
  std::mt19937_64 rng(4);
  const Index len = 17, segs = 3, k = 3, d = 2;
  const Matrix<double> x = random_matrix(1, len * segs, rng);
  const Matrix<double> w = random_matrix(1, k, rng);
  const Matrix<double> b = Matrix<double>::Constant(1, 1, 0.25);
  const Matrix<double> y = diff::causal_conv<double>(x, w, b, d, len);
  for (Index s = 0; s < segs; ++s) {
    const Vector<double> xs = x.block(0, s * len, 1, len).transpose();
    const Vector<double> expect = conv_oracle(xs, w.row(0).transpose(), d, 0.25);
    CHECK((y.block(0, s * len, 1, len).transpose() - expect).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("activations") {
  CHECK(diff::relu(vec({-1, 0, 2})) == vec({0, 0, 2}));
  const auto half = diff::softmax<double>(vec({0, 0}));
  CHECK(half(0) == doctest::Approx(0.5).epsilon(1e-15));
  const auto thirds = diff::softmax<double>(vec({std::log(2.0), 0}));
  CHECK(std::abs(thirds(0) - 2.0 / 3.0) <= 1e-15);
  CHECK(std::abs(thirds(1) - 1.0 / 3.0) <= 1e-15);
  CHECK(diff::sigmoid(0.0) == 0.5);
  CHECK(std::isfinite(diff::sigmoid(-800.0)));
  CHECK(diff::sigmoid(800.0) == 1.0);
  CHECK_THROWS_AS(diff::softmax<double>(Vector<double>()), ShapeError);

  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 200; ++trial) {
    const Vector<double> z = random_matrix(1 + static_cast<Index>(rng() % 9), 1, rng, 20.0);
    const auto s = diff::softmax<double>(z);
    CHECK(std::abs(s.sum() - 1.0) <= 1e-12);
    CHECK(s.minCoeff() >= 0.0);
    const auto shifted = diff::softmax<double>((z.array() + 123.0).matrix());
    CHECK((s - shifted).cwiseAbs().maxCoeff() <= 1e-12);
  }
  const auto big = diff::softmax<double>(vec({1000, -1000, 0}));
  CHECK(big.allFinite());
}

TEST_CASE("dense checks shapes") {
  const Matrix<double> w = Matrix<double>::Ones(2, 3);
  const Matrix<double> b = Matrix<double>::Zero(2, 1);
  CHECK(diff::dense<double>(vec({1, 2, 3}), w, b) == vec({6, 6}));
  CHECK_THROWS_AS(diff::dense<double>(vec({1, 2}), w, b), ShapeError);
}

TEST_CASE("bce_l2_loss") {
  diff::ParamSet<double> none;
  const std::vector<double> half{0.5};
  const std::vector<int> one{1};
  CHECK(diff::bce_l2_loss<double>(half, one, none, 0.0).total() == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  const std::vector<double> exact{1.0, 0.0, 1.0};
  const std::vector<int> labels{1, 0, 1};
  CHECK(diff::bce_l2_loss<double>(exact, labels, none, 0.0).total() <= 1e-9);

  diff::ParamSet<double> theta;
  theta.add("w", 1, 1);
  theta.value(0)(0, 0) = 3.0;
  CHECK(diff::bce_l2_loss<double>(std::vector<double>{1.0}, one, theta, 2.0).total() ==
        doctest::Approx(9.0).epsilon(1e-9));
  theta[0].trainable = false;
  CHECK(diff::bce_l2_loss<double>(std::vector<double>{1.0}, one, theta, 2.0).penalty == 0.0);

  CHECK_THROWS(diff::bce_mean(std::span<const double>(), std::span<const int>()));
  CHECK_THROWS_AS(diff::bce_l2_loss<double>(half, one, none, -1.0), std::invalid_argument);
}

TEST_CASE("gru zero state and single-cell recurrence") {
  const Index h = 4, in = 2;
  const Matrix<double> zero_x = Matrix<double>::Zero(in, 10);
  CHECK(diff::gru_forward<double>(zero_x, Matrix<double>::Zero(3 * h, in), Matrix<double>::Zero(3 * h, h),
                                  Matrix<double>::Zero(3 * h, 1))
            .isZero(0.0));

  std::mt19937_64 rng(8);
  const Matrix<double> wi = random_matrix(3 * h, in, rng);
  const Matrix<double> wh = random_matrix(3 * h, h, rng);
  const Matrix<double> b = random_matrix(3 * h, 1, rng);
  const Matrix<double> x = random_matrix(in, 5, rng);
  Vector<double> state = Vector<double>::Zero(h);
  for (Index t = 0; t < x.cols(); ++t) {
    state = gru_cell(x.col(t), state, wi, wh, b);
    const Vector<double> got = diff::gru_forward<double>(x.leftCols(t + 1), wi, wh, b);
    CHECK((got - state).cwiseAbs().maxCoeff() <= 1e-12);
  }
  CHECK_THROWS_AS(diff::gru_forward<double>(x, wi, Matrix<double>(3 * h, 0), b), std::invalid_argument);
}

TEST_CASE("gat layer") {
  std::mt19937_64 rng(10);
  const Index d = 5;
  const Matrix<double> w = random_matrix(d, d, rng, 0.5);

  // One node attends to itself.
  const Matrix<double> single = random_matrix(1, d, rng);
  Matrix<double> att;
  const auto out1 = models::gat_layer<double>(single, w, &att);
  CHECK(att.rows() == 1);
  CHECK(att(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK((out1.row(0).transpose() - w * single.row(0).transpose()).cwiseAbs().maxCoeff() <= 1e-12);

  // Identical nodes share attention evenly.
  const Matrix<double> same = single.replicate(4, 1);
  const auto out_same = models::gat_layer<double>(same, w, &att);
  CHECK((att.array() - 0.25).abs().maxCoeff() <= 1e-12);
  for (Index c = 0; c < 4; ++c) {
    CHECK((out_same.row(c).transpose() - w * single.row(0).transpose()).cwiseAbs().maxCoeff() <= 1e-12);
  }

  for (int trial = 0; trial < 50; ++trial) {
    const Index c = 1 + static_cast<Index>(rng() % 6);
    const Matrix<double> m = random_matrix(c, d, rng);
    const auto out = models::gat_layer<double>(m, w, &att);
    CHECK((att.rowwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-9);
    CHECK(att.minCoeff() >= 0.0);
    CHECK((out - gat_oracle(m, w)).cwiseAbs().maxCoeff() <= 1e-10);
    // Row permutation in, row permutation out.
    std::vector<Index> perm(static_cast<std::size_t>(c));
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Matrix<double> pm(c, d);
    for (Index i = 0; i < c; ++i) pm.row(i) = m.row(perm[static_cast<std::size_t>(i)]);
    const auto pout = models::gat_layer<double>(pm, w);
    for (Index i = 0; i < c; ++i) {
      CHECK((pout.row(i) - out.row(perm[static_cast<std::size_t>(i)])).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }
  CHECK_THROWS_AS(models::gat_layer<double>(Matrix<double>::Zero(3, 4), w), ShapeError);
}

TEST_CASE("temporal encoder shares filters across channels") {
  std::mt19937_64 rng(12);
  models::StateNet<double> net(toy_spec("statenet"), 5);
  statenet::testing::jitter_biases(net.params(), rng);
  Signal<double> x = random_signal(18, 120, rng);
  x.row(4) = x.row(9);
  const auto h = net.temporal_encode(x);
  CHECK(h.rows() == 18);
  CHECK(h.cols() == 4);
  CHECK(h.row(4) == h.row(9));
  for (Index c : {0, 7, 17}) {
    const Signal<double> alone = x.row(c);
    CHECK((net.temporal_encode(alone).row(0) - h.row(c)).cwiseAbs().maxCoeff() <= 1e-12);
  }

  models::StateNet<double> zero(toy_spec("statenet"), 5);
  for (auto& p : zero.params()) {
    if (p.name.ends_with("bias")) p.value.setZero();
  }
  CHECK(zero.temporal_encode(Signal<double>::Zero(3, 50)).isZero(0.0));
  CHECK_THROWS_AS(net.temporal_encode(Signal<double>(0, 50)), ShapeError);
}

TEST_CASE("spatial fusion of zeros gives one half") {
  models::StateNet<double> net(toy_spec("statenet"), 5);
  zero_params(net.params());
  CHECK(net.spatial_fuse(Matrix<double>::Zero(6, 4)) == 0.5);
  CHECK_THROWS_AS(net.spatial_fuse(Matrix<double>(0, 4)), ShapeError);
}

TEST_CASE("statenet is channel-permutation invariant and montage agnostic") {
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 20; ++trial) {
    models::StateNet<double> net(toy_spec("statenet"), 100 + static_cast<std::uint64_t>(trial));
    statenet::testing::jitter_biases(net.params(), rng);
    const Index c = 2 + static_cast<Index>(rng() % 17);
    const auto x = random_signal(c, 90, rng);
    std::vector<Index> perm(static_cast<std::size_t>(c));
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    CHECK(std::abs(net.predict(x) - net.predict(permute_rows(x, perm))) <= 1e-12);
  }

  models::StateNet<double> net(toy_spec("statenet"), 7);
  statenet::testing::jitter_biases(net.params(), rng);
  for (Index c : {1, 3, 18}) {
    const double p = net.predict(random_signal(c, 200, rng));
    CHECK(p > 0.0);
    CHECK(p < 1.0);
  }
  CHECK(net.montage_agnostic());
}

TEST_CASE("duplicating a channel moves the prediction") {
  std::mt19937_64 rng(16);
  models::StateNet<double> net(toy_spec("statenet"), 9);
  statenet::testing::jitter_biases(net.params(), rng, 0.5);
  const auto x = random_signal(3, 100, rng, 3.0);
  Signal<double> dup(4, 100);
  dup.topRows(3) = x;
  dup.row(3) = x.row(0);
  // Same composition recomputed by hand: encode, then fuse.
  const double p_dup = net.predict(dup);
  CHECK(p_dup == doctest::Approx(net.spatial_fuse(net.temporal_encode(dup))).epsilon(1e-14));
  CHECK(p_dup != net.predict(x));
  CHECK(p_dup > 0.0);
  CHECK(p_dup < 1.0);
}

TEST_CASE("baselines") {
  auto gru = models::make_classifier<double>(toy_spec("gru"), 3, 1);
  auto tcn = models::make_classifier<double>(toy_spec("tcn"), 18, 1);
  CHECK_FALSE(gru->montage_agnostic());
  CHECK_THROWS_AS(tcn->predict(Signal<double>::Zero(3, 100)), ShapeError);
  CHECK_THROWS_AS(gru->predict(Signal<double>::Zero(18, 100)), ShapeError);

  for (auto* m : {gru.get(), tcn.get()}) {
    zero_params(m->params());
    CHECK(m->predict(Signal<double>::Zero(m->input_channels(), 30)) == 0.5);
  }

  // One time step: a single cell then the readout.
  std::mt19937_64 rng(18);
  auto g = models::make_classifier<double>(toy_spec("gru"), 3, 2);
  statenet::testing::jitter_biases(g->params(), rng);
  const auto x = random_signal(3, 1, rng);
  const auto& p = g->params();
  const Vector<double> h = gru_cell(x.col(0), Vector<double>::Zero(4), p.value(0), p.value(1), p.value(2));
  const double logit = (p.value(3) * h)(0, 0) + p.value(4)(0, 0);
  CHECK(g->predict(x) == doctest::Approx(logistic(logit)).epsilon(1e-14));
}

TEST_CASE("checkpoints round-trip bit-exactly") {
  const auto dir = fs::temp_directory_path() / "statenet_test_ckpt";
  fs::remove_all(dir);
  fs::create_directories(dir);
  for (const std::string arch : {"statenet", "gru", "tcn"}) {
    auto model = models::make_classifier<double>(toy_spec(arch), 3, 21);
    model->params()[1].trainable = false;
    const auto path = dir / (arch + ".ckpt");
    models::save_model(path, *model, 3, {{"note", "x"}});
    const auto loaded = models::load_model<double>(path);
    CHECK(loaded.model->arch() == arch);
    CHECK(loaded.meta.at("note") == "x");
    REQUIRE(loaded.model->params().same_layout(model->params()));
    for (Index i = 0; i < model->params().size(); ++i) {
      const auto& a = model->params().value(i);
      const auto& b = loaded.model->params().value(i);
      CHECK(std::memcmp(a.data(), b.data(), static_cast<std::size_t>(a.size()) * sizeof(double)) == 0);
      CHECK(model->params()[i].trainable == loaded.model->params()[i].trainable);
    }
    // Saving the loaded copy reproduces the same blob bytes.
    models::save_model(dir / (arch + "2.ckpt"), *loaded.model, 3, {{"note", "x"}});
    CHECK(slurp(diff::checkpoint_blob_path(path)) == slurp(diff::checkpoint_blob_path(dir / (arch + "2.ckpt"))));
  }

  diff::ParamSet<float> f;
  f.add("a", 2, 3);
  f.value(0) << 1.5f, -0.0f, 3.25e-20f, 7.0f, 1e30f, -2.0f;
  diff::save_checkpoint(dir / "f.ckpt", f, {});
  CHECK(fs::file_size(diff::checkpoint_blob_path(dir / "f.ckpt")) == 24);
  const auto back = diff::load_checkpoint<float>(dir / "f.ckpt");
  CHECK(std::memcmp(back.value(0).data(), f.value(0).data(), 24) == 0);

  // A truncated blob is refused.
  fs::resize_file(diff::checkpoint_blob_path(dir / "f.ckpt"), 20);
  CHECK_THROWS(diff::load_checkpoint<float>(dir / "f.ckpt"));
}
