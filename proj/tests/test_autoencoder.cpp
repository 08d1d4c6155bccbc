#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include "oracles.hpp"
#include "plastigraph/autoencoder/autoencoder.hpp"
#include "plastigraph/error.hpp"
#include "plastigraph/mesh/graph.hpp"
#include "plastigraph/mesh/mesh.hpp"
#include "support.hpp"

using namespace plastigraph;
using num::Matrix;

namespace {

Matrix dense_loop(const Matrix& x, const Matrix& w, const Matrix& b, bool relu) {
  Matrix out(x.rows(), w.cols());
  for (int r = 0; r < x.rows(); ++r) {
    for (int o = 0; o < w.cols(); ++o) {
      double s = b(0, o);
      for (int c = 0; c < x.cols(); ++c) s += x(r, c) * w(c, o);
      out(r, o) = relu ? std::max(s, 0.0) : s;
    }
  }
  return out;
}

mesh::PlasticityGraph small_graph() {
  return mesh::build_dual_graph(mesh::structured_mesh(3, 3, 1.0));
}

std::vector<Matrix> random_snapshots(int count, int n, std::mt19937_64& rng) {
  std::vector<Matrix> s;
  for (int k = 0; k < count; ++k) s.push_back(testutil::random_matrix(n, 3, rng, -1e-3, 2e-3));
  return s;
}

}  // namespace

TEST_SUITE("autoencoder") {
  TEST_CASE("isolated node with identity map returns its input") {
    auto adj = num::Adjacency::from_edges(1, {}, 0.0);
    Matrix x(1, 2);
    x << 0.3, -1.7;
    Matrix y = ae::gin_forward(adj, x, Matrix::Identity(2, 2), Matrix::Zero(1, 2), false);
    CHECK(y(0, 0) == 0.3);
    CHECK(y(0, 1) == -1.7);
  }

  TEST_CASE("two joined nodes sum self and neighbour") {
    std::vector<std::array<int, 2>> e{{0, 1}};
    auto adj = num::Adjacency::from_edges(2, e, 0.0);
    Matrix x(2, 2);
    x << 1, 0, 0, 1;
    Matrix y = ae::gin_forward(adj, x, Matrix::Identity(2, 2), Matrix::Zero(1, 2), false);
    CHECK(y == Matrix::Ones(2, 2));
  }

  TEST_CASE("matrix form agrees with the node loop on 50 random graphs") {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> size(2, 30);
    for (int g = 0; g < 50; ++g) {
      const int n = size(rng);
      const double eps = (g % 3 == 0) ? 0.0 : 0.25 * (g % 5);
      auto edges = oracle::random_edges(n, 0.2, rng);
      auto adj = num::Adjacency::from_edges(n, edges, eps);
      Matrix x = testutil::random_matrix(n, 5, rng);
      Matrix w = testutil::random_matrix(5, 7, rng);
      Matrix b = testutil::random_matrix(1, 7, rng);
      const bool relu = g % 2 == 0;
      Matrix a = ae::gin_forward(adj, x, w, b, relu);
      Matrix o = oracle::gin_node_loop(n, edges, x, w, b, eps, relu);
      CHECK((a - o).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }

  TEST_CASE("gin_forward rejects mismatched weights") {
    auto adj = num::Adjacency::from_edges(3, {}, 0.0);
    CHECK_THROWS_AS(ae::gin_forward(adj, Matrix::Zero(3, 4), Matrix::Zero(5, 2), Matrix::Zero(1, 2), false),
                    ShapeError);
  }

  TEST_CASE("global average pool") {
    Matrix rows = Matrix::Ones(4, 3) * 2.5;
    CHECK(ae::global_average_pool(rows) == Matrix::Constant(1, 3, 2.5));
    Matrix e(2, 2);
    e << 1, 0, 0, 1;
    CHECK(ae::global_average_pool(e) == Matrix::Constant(1, 2, 0.5));

    std::mt19937_64 rng(3);
    Matrix r = testutil::random_matrix(37, 6, rng);
    Matrix pooled = ae::global_average_pool(r);
    for (int c = 0; c < 6; ++c) {
      double s = 0.0;
      for (int i = 0; i < 37; ++i) s += r(i, c);
      CHECK(std::abs(pooled(0, c) - s / 37.0) <= 1e-14);
    }
    CHECK_THROWS_AS(ae::global_average_pool(Matrix(0, 3)), ShapeError);
  }

  TEST_CASE("encoding is invariant under node relabelling") {
    std::mt19937_64 rng(5);
    mesh::PlasticityGraph g = small_graph();
    const int n = g.num_nodes();
    auto snaps = random_snapshots(4, n, rng);
    ae::GraphAutoencoder model(g, 16, 99);
    model.fit_normalization(snaps);
    const Matrix z = model.encode(snaps[0]);

    for (int trial = 0; trial < 10; ++trial) {
      std::vector<int> perm(n);  // new id of old node i
      std::iota(perm.begin(), perm.end(), 0);
      std::shuffle(perm.begin(), perm.end(), rng);
      mesh::PlasticityGraph pg;
      pg.features.resize(n, mesh::kNodeFeatures);
      Matrix px(n, 3);
      for (int i = 0; i < n; ++i) {
        pg.features.row(perm[i]) = g.features.row(i);
        px.row(perm[i]) = snaps[0].row(i);
      }
      for (const auto& e : g.edges) {
        pg.edges.push_back({std::min(perm[e[0]], perm[e[1]]), std::max(perm[e[0]], perm[e[1]])});
      }
      std::sort(pg.edges.begin(), pg.edges.end());
      ae::GraphAutoencoder permuted(pg, 16, 99);
      permuted.fit_normalization(snaps);  // column statistics do not depend on row order
      CHECK((permuted.encode(px) - z).cwiseAbs().maxCoeff() <= 1e-10);
    }
  }

  TEST_CASE("identical inputs give bit-identical codes") {
    std::mt19937_64 rng(8);
    mesh::PlasticityGraph g = small_graph();
    auto snaps = random_snapshots(3, g.num_nodes(), rng);
    ae::GraphAutoencoder model(g, 4, 1);
    model.fit_normalization(snaps);
    Matrix copy = snaps[1];
    CHECK(model.encode(snaps[1]) == model.encode(copy));
    Matrix zero = Matrix::Zero(g.num_nodes(), 3);
    CHECK(model.encode(zero) == model.encode(Matrix::Zero(g.num_nodes(), 3)));
    CHECK_THROWS_AS(model.encode(Matrix::Zero(g.num_nodes() + 1, 3)), ShapeError);
  }

  TEST_CASE("loss matches an explicit node-wise evaluation") {
    std::mt19937_64 rng(21);
    mesh::PlasticityGraph g = small_graph();
    const int n = g.num_nodes();
    auto snaps = random_snapshots(5, n, rng);
    ae::GraphAutoencoder model(g, 3, 4, 8);
    model.fit_normalization(snaps);
    const auto& p = model.params();
    const num::Affine& pn = model.plastic_norm();
    Matrix coords = g.features.leftCols(2);
    const num::Affine cn = num::Affine::fit_range(coords, 0.0, 1.0);

    double total = 0.0;
    for (const auto& s : snaps) {
      Matrix x(n, 5);
      x.leftCols(2) = cn.apply(coords);
      x.rightCols(3) = pn.apply(s);
      Matrix h = oracle::gin_node_loop(n, g.edges, x, p[0], p[1], 0.0, true);
      Matrix pooled = Matrix::Zero(1, h.cols());
      for (int i = 0; i < n; ++i) pooled += h.row(i) / n;
      Matrix z = dense_loop(dense_loop(pooled, p[2], p[3], true), p[4], p[5], false);
      Matrix d = dense_loop(z, p[6], p[7], true);
      Matrix r(n, 3);
      for (int i = 0; i < n; ++i) {
        for (int c = 0; c < 3; ++c) r(i, c) = d(0, i * 3 + c);
      }
      Matrix out = oracle::gin_node_loop(n, g.edges, r, p[8], p[9], 0.0, false);
      double sq = 0.0;
      for (int i = 0; i < n; ++i) {
        for (int c = 0; c < 3; ++c) sq += std::pow(out(i, 2 + c) - x(i, 2 + c), 2);
      }
      total += sq / n;
    }
    total /= static_cast<double>(snaps.size());
    CHECK(std::abs(model.loss(snaps) - total) <= 1e-12 * std::max(1.0, total));
  }

  TEST_CASE("reconstruction R^2 of perfect and mean predictions") {
    std::mt19937_64 rng(2);
    auto truth = random_snapshots(3, 10, rng);
    CHECK(ae::plastic_r2(truth, truth) == 1.0);
    Eigen::RowVector3d mean = Eigen::RowVector3d::Zero();
    for (const auto& t : truth) mean += t.colwise().sum();
    mean /= 30.0;
    std::vector<Matrix> flat;
    for (int k = 0; k < 3; ++k) flat.push_back(Matrix(Matrix::Ones(10, 1) * mean));
    CHECK(std::abs(ae::plastic_r2(truth, flat)) <= 1e-12);
  }

  TEST_CASE("training lowers the loss and is seed deterministic") {
    std::mt19937_64 rng(6);
    mesh::PlasticityGraph g = small_graph();
    auto snaps = random_snapshots(6, g.num_nodes(), rng);
    ae::TrainConfig cfg;
    cfg.epochs = 30;
    cfg.batch = 4;
    cfg.seed = 7;
    ae::GraphAutoencoder a(g, 4, 3, 16), b(g, 4, 3, 16);
    auto ha = a.train(snaps, cfg);
    auto hb = b.train(snaps, cfg);
    CHECK(ha.loss.size() == 30);
    CHECK(ha.loss.back() < ha.loss.front());
    CHECK(ha.loss == hb.loss);
    CHECK(a.params().flatten() == b.params().flatten());
  }

  TEST_CASE("model document round trip and mesh checks") {
    std::mt19937_64 rng(9);
    mesh::PlasticityGraph g = small_graph();
    auto snaps = random_snapshots(3, g.num_nodes(), rng);
    ae::GraphAutoencoder m(g, 5, 12, 8);
    m.fit_normalization(snaps);
    num::Json doc = m.to_json();
    CHECK(doc.at("kind") == "autoencoder");
    CHECK(doc.at("architecture").at("N") == g.num_nodes());
    CHECK(doc.at("architecture").at("D_node") == mesh::kNodeFeatures);
    CHECK(doc.at("architecture").at("D_enc") == 5);
    ae::GraphAutoencoder back = ae::GraphAutoencoder::from_json(num::Json::parse(doc.dump()), g);
    CHECK(back.encode(snaps[2]) == m.encode(snaps[2]));
    CHECK(back.decode(m.encode(snaps[0])) == m.decode(m.encode(snaps[0])));

    mesh::PlasticityGraph other = mesh::build_dual_graph(mesh::structured_mesh(4, 3, 1.0));
    CHECK_THROWS_AS(ae::GraphAutoencoder::from_json(doc, other), ArtifactError);
    mesh::PlasticityGraph rewired = g;
    rewired.edges.pop_back();
    CHECK_THROWS_AS(ae::GraphAutoencoder::from_json(doc, rewired), ArtifactError);
  }

  TEST_CASE("distinct codes decode to distinct fields") {
    mesh::PlasticityGraph g = small_graph();
    ae::GraphAutoencoder m(g, 4, 5);
    Matrix z1 = Matrix::Zero(1, 4), z2 = Matrix::Ones(1, 4);
    CHECK((m.decode(z1) - m.decode(z2)).norm() > 0.0);
    CHECK(m.decode(z1).rows() == g.num_nodes());
    CHECK(m.decode(z1).cols() == mesh::kNodeFeatures);
  }
}
