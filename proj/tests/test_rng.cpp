#include <doctest.h>

#include "lamaml/rng.hpp"

using namespace lamaml;

TEST_SUITE_BEGIN("rng");

TEST_CASE("splitmix64 reproduces the reference output stream") {
  // Known-answer vectors from the reference implementation, seed 0 and
  // seed 1234567, cross-checked against an independent implementation.
  SplitMix64 a(0);
  CHECK(a.next() == 0xe220a8397b1dcdafULL);
  CHECK(a.next() == 0x6e789e6aa1b965f4ULL);
  CHECK(a.next() == 0x06c45d188009454fULL);
  CHECK(a.next() == 0xf88bb8a8724c81ecULL);
  CHECK(a.next() == 0x1b39896a51a8749bULL);

  SplitMix64 b(1234567);
  CHECK(b.next() == 6457827717110365317ULL);
  CHECK(b.next() == 3203168211198807973ULL);
  CHECK(b.next() == 9817491932198370423ULL);
  CHECK(b.next() == 4593380528125082431ULL);
  CHECK(b.next() == 16408922859458223821ULL);
}

TEST_CASE("xoshiro256** reproduces the reference output stream") {
  // State {1,2,3,4} fed directly, matching the reference algorithm.
  Rng direct = Rng::from_state({1, 2, 3, 4});
  CHECK(direct.next() == 11520ULL);
  CHECK(direct.next() == 0ULL);
  CHECK(direct.next() == 1509978240ULL);
  CHECK(direct.next() == 1215971899390074240ULL);
  CHECK(direct.next() == 1216172134540287360ULL);

  // Canonical SplitMix64 seeding, cross-checked independently.
  Rng seeded(42);
  CHECK(seeded.next() == 1546998764402558742ULL);
  CHECK(seeded.next() == 6990951692964543102ULL);
  CHECK(seeded.next() == 12544586762248559009ULL);
}

TEST_CASE("labelled streams are reproducible and independent") {
  Rng a = seeded_rng(99, "init");
  Rng b = seeded_rng(99, "init");
  for (int i = 0; i < 20; ++i) CHECK(a.next() == b.next());

  Rng c = seeded_rng(99, "init");
  Rng d = seeded_rng(99, "reservoir");
  bool all_equal = true;
  for (int i = 0; i < 10; ++i) {
    if (c.next() != d.next()) all_equal = false;
  }
  CHECK_FALSE(all_equal);
}

TEST_CASE("uniform doubles stay in [0,1) and bounded ints in range") {
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const double u = rng.next_double();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(rng.next_below(7) < 7);
  }
}

TEST_CASE("shuffle is a permutation") {
  Rng rng(5);
  std::vector<int> v{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  rng.shuffle(v);
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 10; ++i) CHECK(sorted[static_cast<std::size_t>(i)] == i);
}

TEST_SUITE_END();
