#include <doctest.h>

#include "modseg/ops.hpp"
#include "modseg/tensor.hpp"

using namespace modseg;

TEST_SUITE_BEGIN("autodiff");

TEST_CASE("tensor shape and data invariants") {
  Tensor t({2, 3}, 1.5f);
  CHECK(t.size() == 6);
  CHECK(t.data()[5] == doctest::Approx(1.5));
  CHECK_THROWS_AS(Tensor::from({2, 2}, {1.f, 2.f, 3.f}), ShapeError);
  CHECK_THROWS_AS(t.item(), ContractError);
  CHECK(Tensor::scalar(4.f).item() == doctest::Approx(4.0));
}

TEST_CASE("handles share storage, clone does not") {
  Tensor a({4}, 2.0f);
  Tensor b = a;
  b.data()[0] = 9.0f;
  CHECK(a.data()[0] == 9.0f);
  Tensor c = a.clone();
  c.data()[1] = -1.0f;
  CHECK(a.data()[1] == 2.0f);
}

TEST_CASE("backward: loss = sum(x) gives all-ones gradient") {
  Tensor x({2, 3}, 0.25f);
  x.set_requires_grad(true);
  Tape tape;
  Tensor loss = sum(tape, x);
  tape.backward(loss);
  REQUIRE(x.grad() != nullptr);
  for (std::int64_t i = 0; i < x.size(); ++i) CHECK(x.grad()[i] == doctest::Approx(1.0));
  CHECK(tape.size() == 0);  // cleared after backward
}

TEST_CASE("backward: loss = sum(x*x) at x=3 gives gradient 6") {
  Tensor x = Tensor::from({1}, {3.0f});
  x.set_requires_grad(true);
  Tape tape;
  Tensor loss = sum(tape, mul(tape, x, x));
  tape.backward(loss);
  CHECK(x.grad()[0] == doctest::Approx(6.0));
}

TEST_CASE("gradient accumulation: a tensor used twice sums per-use gradients") {
  // y = sum(x*c1) + sum(x*c2); dy/dx = c1 + c2
  Tensor x = Tensor::from({2}, {1.0f, 2.0f});
  x.set_requires_grad(true);
  Tensor c1 = Tensor::from({2}, {3.0f, 5.0f});
  Tensor c2 = Tensor::from({2}, {7.0f, 11.0f});
  Tape tape;
  Tensor loss = add(tape, sum(tape, mul(tape, x, c1)), sum(tape, mul(tape, x, c2)));
  tape.backward(loss);
  CHECK(x.grad()[0] == doctest::Approx(10.0));
  CHECK(x.grad()[1] == doctest::Approx(16.0));

  // reference: two separate single-use runs
  Tensor x2 = x.clone();
  x2.zero_grad();
  x2.set_requires_grad(true);
  Tape t1;
  Tensor l1 = sum(t1, mul(t1, x2, c1));
  t1.backward(l1);
  Tape t2;
  Tensor l2 = sum(t2, mul(t2, x2, c2));
  t2.backward(l2);
  for (int i = 0; i < 2; ++i) CHECK(x.grad()[i] == doctest::Approx(x2.grad()[i]));
}

TEST_CASE("backward rejects non-scalar loss and off-tape loss") {
  Tensor x({2}, 1.0f);
  x.set_requires_grad(true);
  Tape tape;
  Tensor y = mul(tape, x, x);
  CHECK_THROWS_AS(tape.backward(y), ContractError);
  Tensor stray = Tensor::scalar(1.0f);
  CHECK_THROWS_AS(tape.backward(stray), ContractError);
}

TEST_CASE("non-recording tape stays empty and produces no gradients") {
  Tensor x({3}, 2.0f);
  x.set_requires_grad(true);
  Tape tape(false);
  Tensor y = sum(tape, mul(tape, x, x));
  CHECK(y.item() == doctest::Approx(12.0));
  CHECK(tape.size() == 0);
  CHECK_FALSE(y.requires_grad());
}

TEST_SUITE_END();
