#pragma once

#include <string>
#include <vector>

namespace sbl {

struct OrderedIndexSet {
  int k = 0, n = 0;
  std::vector<int> sigma;  // strictly increasing, entries in 1..k
};

// All strictly increasing n-tuples in {1..k}, lexicographic; 0 <= n <= k <= 16.
std::vector<OrderedIndexSet> enumerate_A(int k, int n);

enum class HistoryFamily { Q11, Q21, Q22 };
const char* family_name(HistoryFamily f);
int family_min_k(HistoryFamily f);

// Q22 breakpoint constraints. `printed`: the stated ranges with m_{2,2} >= min(m_{2,1}+2, m_{1,2}+1),
// restricted to m_{2,2} > m_{1,2} so the piecewise map is defined; coinciding maps are merged.
// `ordered`: m_{2,2} >= max(m_{2,1}+2, m_{1,2}+1), under which tuples and maps correspond one to one.
enum class Q22Reading { printed, ordered };

struct HistoryMap {
  int k = 0;
  HistoryFamily family = HistoryFamily::Q11;
  std::vector<int> breakpoints;  // (m1,m2), (m1,m2,m3) or (m11,m12,m21,m22)
  std::vector<int> values;       // iota(1..k)
  std::vector<int> star;         // iota*(1..k-i)
};

std::vector<HistoryMap> enumerate_Q(int k, HistoryFamily family, Q22Reading reading = Q22Reading::printed);

// Q11: (k-2)(k-1)/2, Q21: (k-4)(k-3)(k-2)/6, Q22: (3k^4 - 30k^3 + 117k^2 - 210k + 144)/24.
double count_closed_form(int k, HistoryFamily family);
// The Q22 numerator exactly as typeset, 3k^4 - 30k^2 + 117k^2 - 210k + 144, over 24.
double q22_closed_form_as_typeset(int k);

// Points m where iota(iota*(m)) != m.
std::vector<int> iota_star_defects(const HistoryMap& h);
bool star_strictly_increasing(const HistoryMap& h);

struct Q22Partition {
  std::vector<HistoryMap> q1, q2, q3;
};
// q3: m11 = k-3 and m21 = k-2; q2: m11 < m21 < m12 outside q3; q1: the rest.
Q22Partition partition_Q22(int k, Q22Reading reading = Q22Reading::printed);

struct CountRow {
  int k;
  HistoryFamily family;
  long long enumerated;
  double closed_form;
  bool match;
};
std::vector<CountRow> count_table(int k_max, Q22Reading reading = Q22Reading::printed);
std::string count_table_csv(const std::vector<CountRow>& rows);

}  // namespace sbl
