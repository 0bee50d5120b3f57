#include <set>
#include <vector>

#include "doctest.h"
#include "sbl/error.hpp"
#include "sbl/histories.hpp"

using namespace sbl;

namespace {

long long pascal(int k, int n) {
  std::vector<std::vector<long long>> c(static_cast<std::size_t>(k + 1));
  for (int i = 0; i <= k; ++i) {
    c[static_cast<std::size_t>(i)].assign(static_cast<std::size_t>(i + 1), 1);
    for (int j = 1; j < i; ++j)
      c[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
          c[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(j - 1)] + c[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(j)];
  }
  return c[static_cast<std::size_t>(k)][static_cast<std::size_t>(n)];
}

// Independent description of Q11: maps of {1..k} onto {1..k-1}, identity before a single repeated
// value, the repeat returns to an index at least two back, then shifted identity.
std::set<std::vector<int>> q11_by_search(int k) {
  std::set<std::vector<int>> out;
  std::vector<int> v(static_cast<std::size_t>(k));
  for (int m2 = 1; m2 <= k; ++m2)
    for (int r = 1; r <= k; ++r) {
      bool ok = true;
      for (int m = 1; m <= k; ++m) v[static_cast<std::size_t>(m - 1)] = m < m2 ? m : (m == m2 ? r : m - 1);
      if (r > m2 - 2) ok = false;
      // consecutive entries never coincide
      for (int m = 1; m < k && ok; ++m)
        if (v[static_cast<std::size_t>(m - 1)] == v[static_cast<std::size_t>(m)]) ok = false;
      if (ok) out.insert(v);
    }
  return out;
}

}  // namespace

TEST_CASE("A(k,n) count matches pascal and sets are increasing") {
  for (int k = 0; k <= 16; ++k)
    for (int n = 0; n <= k; ++n) {
      const auto a = enumerate_A(k, n);
      CHECK(static_cast<long long>(a.size()) == pascal(k, n));
      std::set<std::vector<int>> uniq;
      for (const auto& s : a) {
        for (std::size_t i = 1; i < s.sigma.size(); ++i) CHECK(s.sigma[i] > s.sigma[i - 1]);
        if (!s.sigma.empty()) CHECK((s.sigma.front() >= 1 && s.sigma.back() <= k));
        uniq.insert(s.sigma);
      }
      CHECK(uniq.size() == a.size());
    }
  CHECK_THROWS_AS(enumerate_A(17, 2), DomainError);
  CHECK_THROWS_AS(enumerate_A(3, 4), DomainError);
}

TEST_CASE("Q11 matches closed form, search oracle and inverse relation") {
  for (int k = 3; k <= 12; ++k) {
    const auto q = enumerate_Q(k, HistoryFamily::Q11);
    CHECK(static_cast<double>(q.size()) == count_closed_form(k, HistoryFamily::Q11));
    for (const auto& h : q) {
      CHECK(iota_star_defects(h).empty());
      CHECK(star_strictly_increasing(h));
    }
    if (k <= 9) {
      std::set<std::vector<int>> got;
      for (const auto& h : q) got.insert(h.values);
      CHECK(got == q11_by_search(k));
    }
  }
  CHECK_THROWS_AS(enumerate_Q(2, HistoryFamily::Q11), DomainError);
}

TEST_CASE("Q21 matches closed form") {
  for (int k = 5; k <= 12; ++k) {
    const auto q = enumerate_Q(k, HistoryFamily::Q21);
    CHECK(static_cast<double>(q.size()) == count_closed_form(k, HistoryFamily::Q21));
    std::set<std::vector<int>> uniq;
    for (const auto& h : q) {
      uniq.insert(h.values);
      CHECK(star_strictly_increasing(h));
      // each map takes exactly k-2 distinct values
      CHECK(std::set<int>(h.values.begin(), h.values.end()).size() == static_cast<std::size_t>(k - 2));
    }
    CHECK(uniq.size() == q.size());
  }
}

TEST_CASE("Q21 star inverts iota away from m3-1") {
  for (const auto& h : enumerate_Q(8, HistoryFamily::Q21))
    for (int m : iota_star_defects(h)) CHECK(m == h.breakpoints[2] - 1);
}

TEST_CASE("Q22 counts: enumeration versus closed form is reported") {
  // hand-countable cases: k=4 admits nothing, k=5 has (1,3,2,4) and (1,3,2,5) only
  CHECK(enumerate_Q(4, HistoryFamily::Q22).empty());
  CHECK(count_closed_form(4, HistoryFamily::Q22) == doctest::Approx(1.0));
  const auto q5 = enumerate_Q(5, HistoryFamily::Q22);
  REQUIRE(q5.size() == 2);
  CHECK(q5[0].breakpoints == std::vector<int>{1, 3, 2, 4});
  CHECK(q5[1].breakpoints == std::vector<int>{1, 3, 2, 5});
  CHECK(q22_closed_form_as_typeset(4) == doctest::Approx(61.0));

  const std::vector<long long> printed = {0, 2, 13, 44, 110, 230, 427};
  const std::vector<long long> ordered = {0, 2, 12, 39, 95, 195, 357};
  for (int k = 4; k <= 10; ++k) {
    CHECK(static_cast<long long>(enumerate_Q(k, HistoryFamily::Q22).size()) == printed[static_cast<std::size_t>(k - 4)]);
    CHECK(static_cast<long long>(enumerate_Q(k, HistoryFamily::Q22, Q22Reading::ordered).size()) ==
          ordered[static_cast<std::size_t>(k - 4)]);
  }
  for (const auto& r : count_table(10))
    if (r.family != HistoryFamily::Q22) CHECK(r.match);
}

TEST_CASE("Q22 partition is exact and the third class is empty") {
  for (Q22Reading rd : {Q22Reading::printed, Q22Reading::ordered})
    for (int k = 4; k <= 10; ++k) {
      const auto all = enumerate_Q(k, HistoryFamily::Q22, rd);
      const auto p = partition_Q22(k, rd);
      CHECK(p.q1.size() + p.q2.size() + p.q3.size() == all.size());
      CHECK(p.q3.empty());
      std::set<std::vector<int>> seen;
      for (const auto* part : {&p.q1, &p.q2, &p.q3})
        for (const auto& h : *part) CHECK(seen.insert(h.breakpoints).second);
      for (const auto& h : p.q2) CHECK((h.breakpoints[0] < h.breakpoints[2] && h.breakpoints[2] < h.breakpoints[1]));
    }
}

TEST_CASE("csv table") {
  const std::string csv = count_table_csv(count_table(6));
  CHECK(csv.rfind("k,family,enumerated,closed_form,match\n", 0) == 0);
  CHECK(csv.find("4,Q22,0,1,false") != std::string::npos);
  CHECK(csv.find("5,Q11,6,6,true") != std::string::npos);
}
