#include "sbl/histories.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "sbl/error.hpp"

namespace sbl {

std::vector<OrderedIndexSet> enumerate_A(int k, int n) {
  if (n < 0 || k < n || k > 16) throw DomainError("enumerate_A: need 0 <= n <= k <= 16");
  std::vector<OrderedIndexSet> out;
  std::vector<int> s(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) s[static_cast<std::size_t>(i)] = i + 1;
  while (true) {
    out.push_back({k, n, s});
    int i = n - 1;
    while (i >= 0 && s[static_cast<std::size_t>(i)] == k - n + i + 1) --i;
    if (i < 0) break;
    ++s[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < n; ++j) s[static_cast<std::size_t>(j)] = s[static_cast<std::size_t>(j - 1)] + 1;
  }
  return out;
}

const char* family_name(HistoryFamily f) {
  switch (f) {
    case HistoryFamily::Q11: return "Q11";
    case HistoryFamily::Q21: return "Q21";
    case HistoryFamily::Q22: return "Q22";
  }
  return "?";
}

int family_min_k(HistoryFamily f) {
  switch (f) {
    case HistoryFamily::Q11: return 3;
    case HistoryFamily::Q21: return 5;
    case HistoryFamily::Q22: return 4;
  }
  return 0;
}

namespace {

HistoryMap make_q11(int k, int m1, int m2) {
  HistoryMap h{k, HistoryFamily::Q11, {m1, m2}, {}, {}};
  for (int m = 1; m <= k; ++m) h.values.push_back(m < m2 ? m : (m == m2 ? m1 : m - 1));
  for (int m = 1; m <= k - 1; ++m) h.star.push_back(m < m2 ? m : m + 1);
  return h;
}

HistoryMap make_q21(int k, int m1, int m2, int m3) {
  HistoryMap h{k, HistoryFamily::Q21, {m1, m2, m3}, {}, {}};
  for (int m = 1; m <= k; ++m) {
    int v;
    if (m < m2) v = m;
    else if (m == m2) v = m1;
    else if (m < m3) v = m - 1;
    else if (m == m3) v = m1;
    else v = m - 2;
    h.values.push_back(v);
  }
  for (int m = 1; m <= k - 2; ++m) h.star.push_back(m < m2 ? m : (m < m3 ? m + 1 : m + 2));
  return h;
}

HistoryMap make_q22(int k, int m11, int m12, int m21, int m22) {
  HistoryMap h{k, HistoryFamily::Q22, {m11, m12, m21, m22}, {}, {}};
  for (int m = 1; m <= k; ++m) {
    int v;
    if (m < m12) v = m;
    else if (m == m12) v = m11;
    else if (m < m22) v = m - 1;
    else if (m == m22) v = m21;
    else v = m - 2;
    h.values.push_back(v);
  }
  for (int m = 1; m <= k - 2; ++m) h.star.push_back(m < m12 ? m : (m < m22 ? m + 1 : m + 2));
  return h;
}

}  // namespace

std::vector<HistoryMap> enumerate_Q(int k, HistoryFamily family, Q22Reading reading) {
  if (k < family_min_k(family))
    throw DomainError(std::string("enumerate_Q: k below the minimum for ") + family_name(family));
  if (k > 64) throw DomainError("enumerate_Q: k too large");
  std::vector<HistoryMap> out;
  switch (family) {
    case HistoryFamily::Q11:
      for (int m1 = 1; m1 <= k - 2; ++m1)
        for (int m2 = m1 + 2; m2 <= k; ++m2) out.push_back(make_q11(k, m1, m2));
      break;
    case HistoryFamily::Q21:
      for (int m1 = 1; m1 <= k - 4; ++m1)
        for (int m2 = m1 + 2; m2 <= k - 2; ++m2)
          for (int m3 = m2 + 2; m3 <= k; ++m3) out.push_back(make_q21(k, m1, m2, m3));
      break;
    case HistoryFamily::Q22: {
      std::set<std::vector<int>> seen;
      for (int m11 = 1; m11 <= k - 2; ++m11)
        for (int m12 = m11 + 2; m12 <= k - 2; ++m12)
          for (int m21 = 1; m21 <= k - 2; ++m21) {
            if (m21 == m11 || m21 == m12) continue;
            const int lo = reading == Q22Reading::printed ? std::min(m21 + 2, m12 + 1) : std::max(m21 + 2, m12 + 1);
            for (int m22 = std::max(lo, m12 + 1); m22 <= k; ++m22) {
              HistoryMap h = make_q22(k, m11, m12, m21, m22);
              if (seen.insert(h.values).second) out.push_back(std::move(h));
            }
          }
      break;
    }
  }
  return out;
}

double count_closed_form(int k, HistoryFamily family) {
  const double x = k;
  switch (family) {
    case HistoryFamily::Q11: return (x - 2) * (x - 1) / 2.0;
    case HistoryFamily::Q21: return (x - 4) * (x - 3) * (x - 2) / 6.0;
    case HistoryFamily::Q22: return (3 * x * x * x * x - 30 * x * x * x + 117 * x * x - 210 * x + 144) / 24.0;
  }
  return 0.0;
}

double q22_closed_form_as_typeset(int k) {
  const double x = k;
  return (3 * x * x * x * x - 30 * x * x + 117 * x * x - 210 * x + 144) / 24.0;
}

std::vector<int> iota_star_defects(const HistoryMap& h) {
  std::vector<int> bad;
  for (std::size_t i = 0; i < h.star.size(); ++i) {
    const int m = static_cast<int>(i) + 1;
    const int s = h.star[i];
    if (s < 1 || s > h.k || h.values[static_cast<std::size_t>(s - 1)] != m) bad.push_back(m);
  }
  return bad;
}

bool star_strictly_increasing(const HistoryMap& h) {
  for (std::size_t i = 1; i < h.star.size(); ++i)
    if (!(h.star[i] > h.star[i - 1])) return false;
  return true;
}

Q22Partition partition_Q22(int k, Q22Reading reading) {
  Q22Partition p;
  for (HistoryMap& h : enumerate_Q(k, HistoryFamily::Q22, reading)) {
    const int m11 = h.breakpoints[0], m12 = h.breakpoints[1], m21 = h.breakpoints[2];
    if (m11 == k - 3 && m21 == k - 2) p.q3.push_back(std::move(h));
    else if (m11 < m21 && m21 < m12) p.q2.push_back(std::move(h));
    else p.q1.push_back(std::move(h));
  }
  return p;
}

std::vector<CountRow> count_table(int k_max, Q22Reading reading) {
  std::vector<CountRow> rows;
  for (HistoryFamily f : {HistoryFamily::Q11, HistoryFamily::Q21, HistoryFamily::Q22})
    for (int k = family_min_k(f); k <= k_max; ++k) {
      const long long n = static_cast<long long>(enumerate_Q(k, f, reading).size());
      const double c = count_closed_form(k, f);
      rows.push_back({k, f, n, c, std::abs(c - static_cast<double>(n)) < 1e-9});
    }
  return rows;
}

std::string count_table_csv(const std::vector<CountRow>& rows) {
  std::ostringstream os;
  os << "k,family,enumerated,closed_form,match\n";
  for (const CountRow& r : rows)
    os << r.k << ',' << family_name(r.family) << ',' << r.enumerated << ',' << r.closed_form << ','
       << (r.match ? "true" : "false") << '\n';
  return os.str();
}

}  // namespace sbl
