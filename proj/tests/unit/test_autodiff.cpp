#include <cmath>
#include <functional>
#include <random>
#include <string>

#include "doctest.h"
#include "metaload/autodiff/finite_diff.hpp"
#include "metaload/autodiff/grad.hpp"
#include "metaload/autodiff/graph.hpp"
#include "metaload/autodiff/ops.hpp"
#include "metaload/error.hpp"

using namespace metaload;
using namespace metaload::ad;

namespace {

Tensor random_tensor(std::mt19937_64& rng, Shape shape, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(shape.numel());
  for (double& x : v) x = d(rng);
  return Tensor(shape, std::move(v));
}

std::vector<double> values(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

struct OpCase {
  std::string name;
  std::vector<Shape> input_shapes;
  std::function<Tensor(const std::vector<Tensor>&)> apply;
};

std::vector<OpCase> op_cases() {
  return {
      {"add", {{3, 2}, {3, 2}}, [](auto& in) { return add(in[0], in[1]); }},
      {"sub", {{3, 2}, {3, 2}}, [](auto& in) { return sub(in[0], in[1]); }},
      {"mul", {{3, 2}, {3, 2}}, [](auto& in) { return mul(in[0], in[1]); }},
      {"scalar_mul", {{4}}, [](auto& in) { return scalar_mul(in[0], -1.7); }},
      {"scale", {{}, {2, 3}}, [](auto& in) { return scale(in[0], in[1]); }},
      {"scale_vec1", {{1}, {3}}, [](auto& in) { return scale(in[0], in[1]); }},
      {"matvec", {{3, 4}, {4}}, [](auto& in) { return matvec(in[0], in[1]); }},
      {"matmul_nn", {{3, 4}, {4, 2}}, [](auto& in) { return matmul(in[0], in[1]); }},
      {"matmul_nt", {{3, 4}, {2, 4}}, [](auto& in) { return matmul(in[0], in[1], false, true); }},
      {"matmul_tn", {{4, 3}, {4, 2}}, [](auto& in) { return matmul(in[0], in[1], true, false); }},
      {"matmul_tt", {{4, 3}, {2, 4}}, [](auto& in) { return matmul(in[0], in[1], true, true); }},
      {"transpose", {{2, 3}}, [](auto& in) { return transpose(in[0]); }},
      {"reshape", {{2, 3}}, [](auto& in) { return reshape(in[0], Shape{3, 2}); }},
      {"add_bias", {{3, 2}, {3}}, [](auto& in) { return add_bias(in[0], in[1]); }},
      {"sum_cols", {{3, 4}}, [](auto& in) { return sum_cols(in[0]); }},
      {"broadcast_cols", {{3}}, [](auto& in) { return broadcast_cols(in[0], 4); }},
      {"sigmoid", {{5}}, [](auto& in) { return sigmoid(in[0]); }},
      {"tanh", {{5}}, [](auto& in) { return tanh(in[0]); }},
      {"square", {{2, 2}}, [](auto& in) { return square(in[0]); }},
      {"sum", {{2, 3}}, [](auto& in) { return sum(in[0]); }},
      {"mean", {{2, 3}}, [](auto& in) { return mean(in[0]); }},
      {"expand", {{}}, [](auto& in) { return expand(in[0], Shape{2, 2}); }},
      {"concat_rows", {{2, 3}, {1, 3}}, [](auto& in) { return concat_rows(in[0], in[1]); }},
      {"slice_rows", {{4, 2}}, [](auto& in) { return slice_rows(in[0], 1, 3); }},
      {"pad_rows", {{2, 2}}, [](auto& in) { return pad_rows(in[0], 1, 4); }},
  };
}

// Scalar probe sum(op(inputs) * w) with a fixed random weight so every output
// element contributes with a distinct coefficient.
Tensor probe(const OpCase& c, const std::vector<Tensor>& in, const Tensor& w) { return sum(mul(c.apply(in), w)); }

ParamSet as_params(const std::vector<Tensor>& in) {
  ParamSet p;
  for (std::size_t i = 0; i < in.size(); ++i) p.add("in", std::to_string(i), in[i]);
  return p;
}

}  // namespace

TEST_CASE("op examples") {
  CHECK(values(add(Tensor::vector({1, 2}), Tensor::vector({3, 4}))) == std::vector<double>{4, 6});
  const Tensor eye = Tensor::matrix(2, 2, {1, 0, 0, 1});
  CHECK(values(matvec(eye, Tensor::vector({5, 7}))) == std::vector<double>{5, 7});
  CHECK(sigmoid(Tensor::vector({0.0})).item() == 0.5);
}

TEST_CASE("untracked inputs produce plain values") {
  const Tensor t = add(Tensor::vector({1}), Tensor::vector({2}));
  CHECK_FALSE(t.tracked());
}

TEST_CASE("grad examples") {
  Graph g;
  const Tensor x = g.leaf(Tensor::vector({1, 2, 3}));
  const auto gx = grad(sum(square(x)), std::vector<Tensor>{x});
  CHECK(values(gx[0]) == std::vector<double>{2, 4, 6});

  const Tensor y = g.leaf(Tensor::matrix(2, 3, {1, -2, 3, 0.5, 9, 4}));
  const auto gy = grad(sum(y), std::vector<Tensor>{y});
  CHECK(values(gy[0]) == std::vector<double>(6, 1.0));
  CHECK(gy[0].shape() == y.shape());
}

TEST_CASE("second derivative of x^3 through grad-of-grad") {
  Graph g;
  const Tensor x = g.leaf(Tensor::vector({2.0}));
  const Tensor cube = sum(mul(mul(x, x), x));
  const auto first = grad(cube, std::vector<Tensor>{x}, {.create_graph = true});
  CHECK(first[0].tracked());
  CHECK(first[0].item() == doctest::Approx(12.0));
  const auto second = grad(sum(first[0]), std::vector<Tensor>{x});
  CHECK(second[0].item() == doctest::Approx(12.0).epsilon(1e-14));
}

TEST_CASE("first-order gradients are constants") {
  Graph g;
  const Tensor x = g.leaf(Tensor::vector({2.0}));
  const auto first = grad(sum(square(x)), std::vector<Tensor>{x});
  CHECK_FALSE(first[0].tracked());
}

TEST_CASE("every op's gradient matches central differences") {
  std::mt19937_64 rng(2024);
  for (const auto& c : op_cases()) {
    CAPTURE(c.name);
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<Tensor> in;
      for (const auto& s : c.input_shapes) in.push_back(random_tensor(rng, s));
      const Tensor w = random_tensor(rng, c.apply(in).shape());

      Graph g;
      std::vector<Tensor> leaves;
      for (const auto& t : in) leaves.push_back(g.leaf(t));
      const auto analytic = grad(probe(c, leaves, w), leaves);

      const auto numeric = finite_diff_gradient(
          [&](const ParamSet& p) { return probe(c, p.tensors(), w).item(); }, as_params(in), 1e-5);
      std::vector<double> a, n;
      for (std::size_t i = 0; i < in.size(); ++i) {
        const auto av = values(analytic[i]);
        const auto nv = values(numeric[i]);
        a.insert(a.end(), av.begin(), av.end());
        n.insert(n.end(), nv.begin(), nv.end());
      }
      REQUIRE(relative_error(a, n) < 1e-4);
    }
  }
}

TEST_CASE("every op's backward rule is itself differentiable") {
  // d/dx <grad(probe)(x), v> against central differences of the first-order gradient.
  std::mt19937_64 rng(77);
  for (const auto& c : op_cases()) {
    CAPTURE(c.name);
    for (int trial = 0; trial < 10; ++trial) {
      std::vector<Tensor> in;
      for (const auto& s : c.input_shapes) in.push_back(random_tensor(rng, s));
      const Tensor w = random_tensor(rng, c.apply(in).shape());
      std::vector<Tensor> dirs;
      for (const auto& t : in) dirs.push_back(random_tensor(rng, t.shape()));

      auto directional = [&](const std::vector<Tensor>& gs) {
        Tensor acc = sum(mul(gs[0], dirs[0]));
        for (std::size_t i = 1; i < gs.size(); ++i) acc = add(acc, sum(mul(gs[i], dirs[i])));
        return acc;
      };

      Graph g;
      std::vector<Tensor> leaves;
      for (const auto& t : in) leaves.push_back(g.leaf(t));
      const auto first = grad(probe(c, leaves, w), leaves, {.create_graph = true});
      const auto analytic = grad(directional(first), leaves, {.allow_unused = true});

      const auto numeric = finite_diff_gradient(
          [&](const ParamSet& p) {
            Graph inner;
            std::vector<Tensor> l;
            for (const auto& t : p.tensors()) l.push_back(inner.leaf(t));
            return directional(grad(probe(c, l, w), l)).item();
          },
          as_params(in), 1e-5);
      std::vector<double> a, n;
      for (std::size_t i = 0; i < in.size(); ++i) {
        const auto av = values(analytic[i]);
        const auto nv = values(numeric[i]);
        a.insert(a.end(), av.begin(), av.end());
        n.insert(n.end(), nv.begin(), nv.end());
      }
      // Linear ops have a zero second derivative; both sides then vanish.
      double scale = 0.0;
      for (double v : n) scale = std::max(scale, std::abs(v));
      if (scale < 1e-7) {
        for (double v : a) REQUIRE(std::abs(v) < 1e-7);
      } else {
        REQUIRE(relative_error(a, n) < 1e-4);
      }
    }
  }
}

TEST_CASE("shape errors name the op and both shapes") {
  try {
    (void)add(Tensor::vector({1, 2}), Tensor::vector({1, 2, 3}));
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("add") != std::string::npos);
    CHECK(msg.find("[2]") != std::string::npos);
    CHECK(msg.find("[3]") != std::string::npos);
  }
  CHECK_THROWS_AS(matvec(Tensor::matrix(2, 3, std::vector<double>(6)), Tensor::vector({1, 2})), ShapeError);
  CHECK_THROWS_AS(matmul(Tensor::matrix(2, 3, std::vector<double>(6)), Tensor::matrix(2, 3, std::vector<double>(6))),
                  ShapeError);
  CHECK_THROWS_AS(slice_rows(Tensor::vector({1, 2}), 1, 3), ShapeError);
}

TEST_CASE("non-finite values are domain errors") {
  CHECK_THROWS_AS(Tensor::vector({1.0, std::nan("")}), DomainError);
  CHECK_THROWS_AS(Tensor::scalar(INFINITY), DomainError);
  CHECK_THROWS_AS(scalar_mul(Tensor::vector({1e300}), 1e300), DomainError);
}

TEST_CASE("grad error paths") {
  Graph g;
  const Tensor x = g.leaf(Tensor::vector({1, 2}));
  const Tensor unused = g.leaf(Tensor::vector({3}));
  CHECK_THROWS_AS(grad(square(x), std::vector<Tensor>{x}), GraphError);  // non-scalar loss
  CHECK_THROWS_AS(grad(sum(x), std::vector<Tensor>{unused}), GraphError);
  const auto z = grad(sum(x), std::vector<Tensor>{unused}, {.allow_unused = true});
  CHECK(z[0].item() == 0.0);
  CHECK_THROWS_AS(grad(Tensor::scalar(1.0), std::vector<Tensor>{x}), GraphError);

  Graph other;
  const Tensor y = other.leaf(Tensor::vector({1, 2}));
  CHECK_THROWS_AS(add(x, y), GraphError);
  CHECK_THROWS_AS(grad(sum(x), std::vector<Tensor>{y}), GraphError);
}

TEST_CASE("graph nodes only reference earlier nodes") {
  Graph g;
  const Tensor x = g.leaf(Tensor::vector({0.3, -0.2}));
  const Tensor loss = sum(mul(tanh(x), sigmoid(x)));
  (void)grad(loss, std::vector<Tensor>{x}, {.create_graph = true});
  for (NodeId id = 0; id < g.size(); ++id) {
    const Node& n = g.node(id);
    for (std::uint8_t k = 0; k < n.arity; ++k) CHECK(n.inputs[k] < id);
  }
}

TEST_CASE("graph replay is deterministic") {
  auto run = [] {
    std::mt19937_64 rng(5);
    Graph g;
    const Tensor a = g.leaf(random_tensor(rng, Shape{4, 3}));
    const Tensor b = g.leaf(random_tensor(rng, Shape{3, 2}));
    const Tensor loss = mean(square(tanh(matmul(a, b))));
    auto gs = grad(loss, std::vector<Tensor>{a, b}, {.create_graph = true});
    auto hs = grad(sum(gs[0]), std::vector<Tensor>{a, b});
    std::vector<double> out = values(loss);
    for (const auto& t : gs) out.insert(out.end(), t.data().begin(), t.data().end());
    for (const auto& t : hs) out.insert(out.end(), t.data().begin(), t.data().end());
    return out;
  };
  CHECK(run() == run());
}

TEST_CASE("finite differences") {
  ParamSet p;
  p.add("l", "theta", Tensor::scalar(3.0));
  const auto g = finite_diff_gradient([](const ParamSet& q) { return q[0].item() * q[0].item(); }, p, 1e-5);
  CHECK(std::abs(g[0].item() - 6.0) < 1e-8);
  const auto z = finite_diff_gradient([](const ParamSet&) { return 4.2; }, p, 1e-5);
  CHECK(z[0].item() == 0.0);
  CHECK_THROWS_AS(finite_diff_gradient([](const ParamSet&) { return 0.0; }, p, 0.0), DomainError);
}
