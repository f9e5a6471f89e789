// Copyright 2026 The TAAF-SNN Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support.hpp"
#include "taaf/branch.hpp"
#include "taaf/error.hpp"
#include "taaf/gradcheck.hpp"

using namespace taaf;
using namespace taaf::testing;

namespace {

BranchConfig small_branch(std::size_t native, std::size_t aligned) {
  BranchConfig c;
  c.native_timesteps = native;
  c.aligned_timesteps = aligned;
  c.input_features = 10;
  c.conv_channels = {2, 3};
  c.feature_width = 6;
  return c;
}

}  // namespace

TEST_CASE("alignment_plan examples") {
  CHECK(alignment_plan(4, 3) == AlignmentPlan{2, 1});
  CHECK(alignment_plan(3, 3) == AlignmentPlan{1, 1});
  CHECK(alignment_plan(5, 5) == AlignmentPlan{1, 1});
  CHECK(alignment_plan(8, 2) == AlignmentPlan{7, 1});
  CHECK_THROWS_AS(alignment_plan(3, 4), ConfigError);
  CHECK_THROWS_AS(alignment_plan(0, 0), ConfigError);
}

TEST_CASE("time_align examples") {
  Tape t;
  auto rng = rng_for(1);
  Tensor s = bernoulli({2, 3, 4}, rng, 0.5);
  CHECK(time_align(t.leaf(s), t.leaf(Tensor(Shape{4, 1}, 1.0)), alignment_plan(3, 3)).value() == s);
  CHECK(time_align(t.leaf(s), t.leaf(Tensor(Shape{4, 1})), alignment_plan(3, 3)).value() ==
        Tensor(Shape{2, 3, 4}));

  Tensor x = bernoulli({2, 4, 3}, rng, 0.5);
  Tensor avg = time_align(t.leaf(x), t.leaf(Tensor(Shape{3, 2}, 0.5)), alignment_plan(4, 3)).value();
  REQUIRE(avg.shape() == Shape{2, 3, 3});
  for (std::size_t b = 0; b < 2; ++b)
    for (std::size_t k = 0; k < 3; ++k)
      for (std::size_t d = 0; d < 3; ++d)
        CHECK(avg.at({b, k, d}) == 0.5 * (x.at({b, k, d}) + x.at({b, k + 1, d})));
}

TEST_CASE("identity alignment is exact on gradients too") {
  auto rng = rng_for(2);
  Tape t;
  Var x = t.leaf(uniform({2, 3, 4}, rng));
  Tensor r = uniform({2, 3, 4}, rng);
  t.backward(sum_all(mul(time_align(x, t.leaf(Tensor(Shape{4, 1}, 1.0)), alignment_plan(3, 3)),
                         t.constant(r))));
  CHECK(x.grad() == r);
}

TEST_CASE("time_align gradients match finite differences") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto rng = rng_for(seed);
    const std::size_t target = pick(rng, 1, 4), native = target + pick(rng, 0, 3);
    const std::size_t d = pick(rng, 1, 4);
    const AlignmentPlan plan = alignment_plan(native, target);
    Parameter x("x", uniform({2, native, d}, rng));
    Parameter k("k", uniform({d, plan.kernel}, rng));
    Tensor r = uniform({2, target, d}, rng);
    const double err = finite_difference_check(
        [&](Tape& t) {
          return sum_all(mul(time_align(t.bind(x), t.bind(k), plan), t.constant(r)));
        },
        {&x, &k});
    CHECK(err < 1e-5);
  }
}

TEST_CASE("branch encode contract") {
  std::mt19937_64 init(7);
  Branch br(small_branch(4, 3), init);
  Tape t;
  CHECK(br.encode(t, t.leaf(Tensor(Shape{3, 4, 10}))).value() == Tensor(Shape{3, 4, 6}));
  // Initial alignment kernel is the temporal mean.
  CHECK(br.align_kernel().value == Tensor(Shape{6, 2}, 0.5));

  auto rng = rng_for(3);
  Tensor raw = uniform({5, 4, 10}, rng, 0, 3);
  Tensor s = br.encode(t, t.leaf(raw)).value();
  CHECK(s.shape() == Shape{5, 4, 6});
  for (double v : s.data()) CHECK((v == 0.0 || v == 1.0));
  CHECK(br.align(t, t.leaf(s)).shape() == Shape{5, 3, 6});

  std::mt19937_64 init2(7);
  Branch again(small_branch(4, 3), init2);
  Tape t2;
  CHECK(again.encode(t2, t2.leaf(raw)).value() == s);

  CHECK_THROWS_AS(br.encode(t, t.leaf(Tensor(Shape{5, 4, 9}))), DimensionError);
}

TEST_CASE("branch config validation") {
  CHECK_NOTHROW(small_branch(4, 3).validate());
  CHECK_THROWS_AS(small_branch(3, 4).validate(), ConfigError);
  BranchConfig c = small_branch(3, 3);
  c.conv_kernel = 20;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = small_branch(3, 3);
  c.feature_width = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("encoder layers end with the encode output") {
  std::mt19937_64 init(9);
  Branch br(small_branch(3, 3), init);
  auto rng = rng_for(4);
  Tensor raw = uniform({2, 3, 10}, rng, 0, 3);
  Tape t;
  std::vector<Var> layers = br.encode_layers(t, t.leaf(raw));
  CHECK(layers.size() == 3);
  Tape t2;
  CHECK(layers.back().value() == br.encode(t2, t2.leaf(raw)).value());
}
