#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <random>
#include <vector>

#include "gdn/kernels.hpp"

using namespace gdn::kernels;

namespace {

std::vector<double> rand_vec(size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

std::vector<int> rand_keys(int n, int num_keys, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> k(0, num_keys - 1);
  std::vector<int> keys(static_cast<size_t>(n));
  for (int& x : keys) x = k(rng);
  return keys;
}

bool bits_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("group_rows is a stable counting sort") {
  std::vector<int> keys = {2, 0, 2, 1, 0, 2};
  RowGroups g = group_rows(keys.data(), 6, 3);
  CHECK(g.num_groups() == 3);
  CHECK(g.offsets == std::vector<int>{0, 2, 3, 6});
  // members of each key keep their original order
  CHECK(g.members == std::vector<int>{1, 4, 3, 0, 2, 5});
  CHECK(g.count(0) == 2);
  CHECK(g.count(2) == 3);
}

TEST_CASE("group_rows handles empty keys and empty input") {
  RowGroups g = group_rows(nullptr, 0, 4);
  CHECK(g.num_groups() == 4);
  for (int s = 0; s < 4; ++s) CHECK(g.count(s) == 0);
}

TEST_CASE("parallel matmul is bit-identical to the serial reference") {
  std::mt19937_64 rng(11);
  for (auto [m, k, n] : {std::tuple{3, 4, 5}, {64, 17, 31}, {200, 300, 40}}) {
    auto a = rand_vec(static_cast<size_t>(m) * k, rng);
    auto b = rand_vec(static_cast<size_t>(k) * n, rng);
    std::vector<double> c1(static_cast<size_t>(m) * n), c2 = c1;
    matmul(a.data(), b.data(), c1.data(), m, k, n);
    serial::matmul(a.data(), b.data(), c2.data(), m, k, n);
    CHECK(bits_equal(c1, c2));
  }
}

TEST_CASE("parallel gather matches serial") {
  std::mt19937_64 rng(12);
  const int rows = 500, d = 7, n_ids = 2000;
  auto src = rand_vec(static_cast<size_t>(rows) * d, rng);
  auto ids = rand_keys(n_ids, rows, rng);
  std::vector<double> d1(static_cast<size_t>(n_ids) * d), d2 = d1;
  gather_rows(src.data(), ids.data(), d1.data(), n_ids, d);
  serial::gather_rows(src.data(), ids.data(), d2.data(), n_ids, d);
  CHECK(bits_equal(d1, d2));
}

TEST_CASE("segment reductions are bit-identical to serial, all sizes") {
  std::mt19937_64 rng(13);
  for (int n_rows : {0, 1, 17, 4096, 60000}) {
    const int d = 5;
    const int num_seg = std::max(1, n_rows / 7);
    auto src = rand_vec(static_cast<size_t>(n_rows) * d, rng);
    auto keys = rand_keys(n_rows, num_seg, rng);
    RowGroups seg = group_rows(keys.data(), n_rows, num_seg);

    std::vector<double> a(static_cast<size_t>(num_seg) * d), b = a;
    segment_sum(src.data(), a.data(), d, seg);
    serial::segment_sum(src.data(), keys.data(), b.data(), n_rows, d, num_seg);
    CHECK(bits_equal(a, b));

    segment_mean(src.data(), a.data(), d, seg);
    serial::segment_mean(src.data(), keys.data(), b.data(), n_rows, d, num_seg);
    CHECK(bits_equal(a, b));

    std::vector<int> arg1(static_cast<size_t>(num_seg) * d), arg2 = arg1;
    segment_max(src.data(), a.data(), arg1.data(), d, seg);
    serial::segment_max(src.data(), keys.data(), b.data(), arg2.data(), n_rows,
                        d, num_seg);
    CHECK(bits_equal(a, b));
    CHECK(arg1 == arg2);

    std::vector<double> s1(static_cast<size_t>(n_rows) * d), s2 = s1;
    segment_softmax(src.data(), s1.data(), d, seg);
    serial::segment_softmax(src.data(), keys.data(), s2.data(), n_rows, d, num_seg);
    CHECK(bits_equal(s1, s2));
  }
}

TEST_CASE("scatter_add matches a plain loop") {
  std::mt19937_64 rng(14);
  const int n_src = 300, d = 4, n_dst = 40;
  auto src = rand_vec(static_cast<size_t>(n_src) * d, rng);
  auto ids = rand_keys(n_src, n_dst, rng);
  RowGroups by_id = group_rows(ids.data(), n_src, n_dst);

  std::vector<double> got(static_cast<size_t>(n_dst) * d, 0.0);
  scatter_add_rows(src.data(), got.data(), d, by_id);
  std::vector<double> want(static_cast<size_t>(n_dst) * d, 0.0);
  serial::scatter_add_rows(src.data(), ids.data(), want.data(), n_src, d);
  CHECK(bits_equal(got, want));
}

TEST_CASE("empty segments give zero rows and -1 argmax") {
  const int d = 3;
  std::vector<double> src = {1, 2, 3};
  std::vector<int> keys = {2};  // segments 0, 1, 3 stay empty
  RowGroups seg = group_rows(keys.data(), 1, 4);
  std::vector<double> out(4 * d, 99.0);
  std::vector<int> arg(4 * d, 99);
  segment_max(src.data(), out.data(), arg.data(), d, seg);
  for (int s : {0, 1, 3})
    for (int c = 0; c < d; ++c) {
      CHECK(out[static_cast<size_t>(s) * d + c] == 0.0);
      CHECK(arg[static_cast<size_t>(s) * d + c] == -1);
    }
  CHECK(out[2 * d + 1] == 2.0);
  CHECK(arg[2 * d + 1] == 0);
}
