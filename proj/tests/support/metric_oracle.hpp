#pragma once

#include <cstdlib>
#include <vector>

#include "parkcharge/harness.hpp"

namespace parkcharge::test {

// Confusion-matrix metrics computed independently of the harness.
inline harness::Metrics oracle_metrics(const std::vector<int>& t, const std::vector<int>& p, int k) {
  std::vector<std::vector<int>> cm(k, std::vector<int>(k, 0));
  double abs_err = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    ++cm[t[i]][p[i]];
    abs_err += std::abs(t[i] - p[i]);
  }
  harness::Metrics m;
  m.mae = abs_err / static_cast<double>(t.size());
  int tp_all = 0, fp_all = 0, fn_all = 0;
  double f1_sum = 0;
  int present = 0;
  for (int c = 0; c < k; ++c) {
    int tp = cm[c][c], fp = 0, fn = 0;
    for (int o = 0; o < k; ++o)
      if (o != c) {
        fp += cm[o][c];
        fn += cm[c][o];
      }
    tp_all += tp;
    fp_all += fp;
    fn_all += fn;
    const double prec = tp + fp ? static_cast<double>(tp) / (tp + fp) : 0.0;
    const double rec = tp + fn ? static_cast<double>(tp) / (tp + fn) : 0.0;
    const double f1 = prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0.0;
    m.precision.push_back(prec);
    m.recall.push_back(rec);
    m.f1.push_back(f1);
    if (tp + fn > 0) {
      f1_sum += f1;
      ++present;
    }
  }
  const double mp = static_cast<double>(tp_all) / (tp_all + fp_all);
  const double mr = static_cast<double>(tp_all) / (tp_all + fn_all);
  m.micro_f1 = mp + mr > 0 ? 2 * mp * mr / (mp + mr) : 0.0;
  m.macro_f1 = f1_sum / present;
  return m;
}

}  // namespace parkcharge::test
