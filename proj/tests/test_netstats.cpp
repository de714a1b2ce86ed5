#include "pqvar/distributions.hpp"
#include "pqvar/netstats.hpp"

#include "oracles.hpp"

#include <catch_amalgamated.hpp>

#include <random>

using namespace pqvar;
using Catch::Matchers::WithinAbs;

namespace {

SubNetwork make_net(const Eigen::MatrixXi& adj, const Eigen::MatrixXi& sign, std::string name = "n")
{
  SubNetwork net;
  net.name = std::move(name);
  net.adj = adj;
  net.sign = sign;
  net.t_vals = (adj.cwiseProduct(sign)).cast<double>() * 5.0;
  return net;
}

LayerSet empty_layers(int n)
{
  LayerSet layers;
  for (std::size_t l = 0; l < kLayerCount; ++l) {
    layers[l] = make_net(Eigen::MatrixXi::Zero(n, n), Eigen::MatrixXi::Zero(n, n),
                         layer_name(Layer::from_index(l)));
  }
  return layers;
}

Eigen::MatrixXi random_adj(std::mt19937_64& rng, int n, double density)
{
  std::bernoulli_distribution link(density);
  Eigen::MatrixXi a(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      a(i, j) = link(rng) ? 1 : 0;
    }
  }
  return a;
}

} // namespace

TEST_CASE("thresholding at the critical value", "[netstats]")
{
  CHECK(threshold(Eigen::MatrixXd::Zero(3, 3), 0.001).links() == 0);
  Eigen::MatrixXd t(1, 3);
  t << 3.2906, 3.2904, -3.2906;
  const auto net = threshold(t, 0.001);
  CHECK(net.adj(0, 0) == 1);
  CHECK(net.adj(0, 1) == 0);
  CHECK(net.adj(0, 2) == 1);
  CHECK(net.sign(0, 2) == -1);
  const double crit = oracle::inverse_normal(1.0 - 0.001 / 2.0);
  CHECK(3.2904 < crit);
  CHECK(3.2906 > crit);
  Eigen::MatrixXd nan_t = Eigen::MatrixXd::Constant(2, 2, std::nan(""));
  CHECK(threshold(nan_t, 0.001).links() == 0);
}

TEST_CASE("self / cross split", "[netstats]")
{
  const int n = 5;
  const auto id = make_net(Eigen::MatrixXi::Identity(n, n), Eigen::MatrixXi::Identity(n, n));
  CHECK(split_self_cross(id).self.size() == n);
  CHECK(split_self_cross(id).cross.empty());
  Eigen::MatrixXi off = Eigen::MatrixXi::Ones(n, n) - Eigen::MatrixXi::Identity(n, n);
  const auto s = split_self_cross(make_net(off, off));
  CHECK(s.self.empty());
  CHECK(s.cross.size() == n * (n - 1));
}

TEST_CASE("QIG aggregation", "[netstats]")
{
  const int n = 4;
  SECTION("all-zero layers")
  {
    const auto qig = qig_aggregate(empty_layers(n));
    for (const auto* s : {&qig.self, &qig.cross}) {
      for (const auto& e : s->edges) {
        CHECK(e.proportion == 0.0);
        CHECK(!e.positive_share.has_value());
      }
    }
  }
  SECTION("every self link present and negative")
  {
    auto layers = empty_layers(n);
    const Layer l{Region::kLinear, Target::kMedian};
    layers[l.index()] = make_net(Eigen::MatrixXi::Identity(n, n), -Eigen::MatrixXi::Identity(n, n));
    const auto qig = qig_aggregate(layers);
    CHECK(qig.self.edges[l.index()].proportion == 1.0);
    CHECK(qig.self.edges[l.index()].positive_share == 0.0);
    CHECK(qig.cross.edges[l.index()].proportion == 0.0);
    CHECK_THAT(qig.self.region_weight[1], WithinAbs(1.0 / 3.0, 1e-15));
    CHECK_THAT(qig.self.target_weight[1], WithinAbs(1.0 / 3.0, 1e-15));
  }
  SECTION("report-scale example: 221 of 260 self links, 219 negative")
  {
    const int big = 260;
    auto layers = empty_layers(big);
    Eigen::MatrixXi adj = Eigen::MatrixXi::Zero(big, big);
    Eigen::MatrixXi sign = Eigen::MatrixXi::Zero(big, big);
    for (int i = 0; i < 221; ++i) {
      adj(i, i) = 1;
      sign(i, i) = i < 219 ? -1 : 1;
    }
    const Layer l{Region::kLinear, Target::kMedian};
    layers[l.index()] = make_net(adj, sign);
    const auto e = qig_aggregate(layers).self.edges[l.index()];
    CHECK_THAT(e.proportion, WithinAbs(0.85, 1e-12));
    CHECK_THAT(1.0 - *e.positive_share, WithinAbs(0.991, 5e-4));
  }
}

TEST_CASE("Spearman", "[netstats]")
{
  const std::vector<double> x{1, 2, 3, 4, 5};
  CHECK(*spearman(x, std::vector<double>{2, 4, 6, 8, 10}).rho == 1.0);
  CHECK(*spearman(x, std::vector<double>{5, 4, 3, 2, 1}).rho == -1.0);
  CHECK_THAT(*spearman(x, std::vector<double>{1, 3, 2, 5, 4}).rho, WithinAbs(0.8, 1e-12));
  CHECK_THAT(oracle::spearman_tie_free(x, {1, 3, 2, 5, 4}), WithinAbs(0.8, 1e-12));
  const auto constant = spearman(x, std::vector<double>{1, 1, 1, 1, 1});
  CHECK(!constant.rho);
  CHECK(!constant.p_value);
  CHECK_THROWS_AS(spearman(x, std::vector<double>{1, 2}), std::invalid_argument);
}

TEST_CASE("Spearman p-value uses the t approximation", "[netstats]")
{
  // ρ = 0.8, n = 5: t = 0.8·sqrt(3/0.36) = 2.3094; two-sided p with 3 df.
  // Student-t(3) CDF has the closed form
  // F(t) = 1/2 + [θ + sinθ cosθ]/π with θ = atan(t/√3).
  const double t = 0.8 * std::sqrt(3.0 / 0.36);
  const double th = std::atan(t / std::sqrt(3.0));
  const double upper = 0.5 - (th + std::sin(th) * std::cos(th)) / M_PI;
  const auto s = spearman(std::vector<double>{1, 2, 3, 4, 5}, std::vector<double>{1, 3, 2, 5, 4});
  CHECK_THAT(*s.p_value, WithinAbs(2.0 * upper, 1e-12));
}

TEST_CASE("CCDF", "[netstats]")
{
  const std::vector<int> zeros{0, 0, 0};
  const auto c0 = ccdf(zeros);
  REQUIRE(c0.size() == 1);
  CHECK(c0[0].k == 0);
  CHECK(c0[0].survival == 1.0);

  const std::vector<int> d{1, 1, 2};
  const auto c = ccdf(d);
  REQUIRE(c.size() == 3);
  CHECK((c[0].k == 0 && c[0].survival == 1.0));
  CHECK((c[1].k == 1 && c[1].survival == 1.0));
  CHECK(c[2].k == 2);
  CHECK_THAT(c[2].survival, WithinAbs(1.0 / 3.0, 1e-15));
}

TEST_CASE("P(Down)", "[netstats]")
{
  const std::vector<double> caps{10, 5, 1};
  Eigen::MatrixXi from_top = Eigen::MatrixXi::Zero(3, 3);
  from_top(0, 1) = from_top(0, 2) = 1;
  CHECK(*p_down(from_top, caps) == 1.0);
  CHECK(*p_down(from_top.transpose(), caps) == 0.0);
  CHECK(!p_down(Eigen::MatrixXi::Identity(3, 3), caps).has_value());
  const std::vector<double> tied{2, 2, 1};
  Eigen::MatrixXi tie = Eigen::MatrixXi::Zero(3, 3);
  tie(0, 1) = 1;
  CHECK(*p_down(tie, tied) == 0.5);
}

TEST_CASE("degree statistics", "[netstats]")
{
  const std::vector<double> caps{5, 4, 3, 2, 1};
  SECTION("empty network")
  {
    const auto s = degree_stats(Eigen::MatrixXi::Zero(5, 5), caps);
    CHECK(s.mean_degree == 0.0);
    CHECK(s.sd_out == 0.0);
    CHECK(!s.out_vs_cap.rho);
    CHECK(!s.p_down);
  }
  SECTION("star graph, ties handled with midranks")
  {
    Eigen::MatrixXi star = Eigen::MatrixXi::Zero(5, 5);
    for (int j = 1; j < 5; ++j) {
      star(0, j) = 1;
    }
    const auto out = out_degrees(star);
    CHECK(out(0) == out.maxCoeff());
    const auto s = degree_stats(star, caps);
    const std::vector<double> od(out.data(), out.data() + 5);
    CHECK_THAT(*s.out_vs_cap.rho, WithinAbs(oracle::spearman_with_ties(od, caps), 1e-12));
    CHECK(*s.p_down == 1.0);
  }
  SECTION("scaled multigraph degrees")
  {
    auto layers = empty_layers(5);
    layers[0] = make_net(Eigen::MatrixXi::Ones(5, 5) - Eigen::MatrixXi::Identity(5, 5),
                         Eigen::MatrixXi::Ones(5, 5));
    const auto mg = build_multigraph(layers);
    CHECK(mg.total_adj == layers[0].adj);
    const auto s = degree_stats(mg.total_adj, caps, 9.0);
    CHECK_THAT(s.mean_degree, WithinAbs(4.0 / 9.0, 1e-15));
  }
}

TEST_CASE("statistics invariants on random networks", "[netstats][property]")
{
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> size(3, 40);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int rep = 0; rep < 100; ++rep) {
    const int n = size(rng);
    const Eigen::MatrixXi adj = random_adj(rng, n, unit(rng));
    std::vector<double> caps(static_cast<std::size_t>(n));
    for (auto& c : caps) {
      c = unit(rng);
    }
    // handshake: Σ out = Σ in = links
    CHECK(out_degrees(adj).sum() == adj.sum());
    CHECK(in_degrees(adj).sum() == adj.sum());
    // reversal symmetry of P(Down)
    const auto pd = p_down(adj, caps);
    const auto pr = p_down(adj.transpose(), caps);
    REQUIRE(pd.has_value() == pr.has_value());
    if (pd) {
      CHECK_THAT(*pd + *pr, WithinAbs(1.0, 1e-12));
    }
    // CCDF is 1 at zero and non-increasing
    const Eigen::VectorXi out = out_degrees(adj);
    const std::vector<int> deg(out.data(), out.data() + n);
    const auto c = ccdf(deg);
    CHECK(c.front().survival == 1.0);
    for (std::size_t k = 1; k < c.size(); ++k) {
      CHECK(c[k].survival <= c[k - 1].survival);
      CHECK(c[k].k > c[k - 1].k);
    }
    // Spearman against the tie-free oracle
    std::vector<double> x(static_cast<std::size_t>(n)), y(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
      x[static_cast<std::size_t>(k)] = unit(rng);
      y[static_cast<std::size_t>(k)] = unit(rng) + 0.5 * x[static_cast<std::size_t>(k)];
    }
    CHECK_THAT(*spearman(x, y).rho, WithinAbs(oracle::spearman_tie_free(x, y), 1e-12));
  }
}

TEST_CASE("degree correlation matrix", "[netstats]")
{
  std::mt19937_64 rng(1);
  LayerSet layers;
  for (std::size_t l = 0; l < kLayerCount; ++l) {
    const auto a = random_adj(rng, 30, 0.3);
    layers[l] = make_net(a, a, layer_name(Layer::from_index(l)));
  }
  layers[4] = layers[0];
  const auto dc = degree_correlation_matrix(layers);
  REQUIRE(dc.rho.rows() == 18);
  CHECK(dc.labels[0] == "out:lower->q_low");
  CHECK(dc.labels[9] == "in:lower->q_low");
  for (Eigen::Index k = 0; k < 18; ++k) {
    CHECK_THAT(dc.rho(k, k), WithinAbs(1.0, 1e-12));
  }
  CHECK_THAT(dc.rho(9, 13), WithinAbs(1.0, 1e-12));
  CHECK((dc.rho - dc.rho.transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("multigraph of an empty set of layers is empty", "[netstats]")
{
  const auto mg = build_multigraph(empty_layers(4));
  CHECK(mg.total_adj.sum() == 0);
  CHECK(piecewise_median(empty_layers(4)).sum() == 0);
}
