#pragma once

#include <cstddef>

namespace openem {

/// Confusion counts with "matched" as the positive class.
struct Confusion {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;

  std::size_t total() const { return tp + fp + fn + tn; }
  /// 0 when nothing was predicted positive.
  double precision() const { return tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0; }
  /// 0 when there are no positives.
  double recall() const { return tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0; }
  /// 2TP / (2TP + FP + FN), equal to 2PR/(P+R); 0 when P + R = 0.
  double f1() const {
    const std::size_t den = 2 * tp + fp + fn;
    return den && tp ? 2.0 * static_cast<double>(tp) / static_cast<double>(den) : 0.0;
  }

  void add(bool gold, bool predicted) {
    if (gold) {
      ++(predicted ? tp : fn);
    } else {
      ++(predicted ? fp : tn);
    }
  }
};

}  // namespace openem
