#pragma once

// Manifest-driven evaluations of readers, extractors and matchers, and the
// end-to-end black-box evaluation.

#include "fpeval/eval/blackbox.hpp"
#include "fpeval/eval/common.hpp"
#include "fpeval/eval/extractor.hpp"
#include "fpeval/eval/matcher.hpp"
#include "fpeval/eval/reader.hpp"

namespace fpeval::eval {

/// Runs the evaluation the manifest asks for.
inline io::Report run(const io::RunManifest& m, const EvalOptions& opt = {}) {
  switch (m.kind) {
    case io::EvalKind::kReader: return run_reader_eval(m, opt);
    case io::EvalKind::kExtractor: return run_extractor_eval(m, opt);
    case io::EvalKind::kMatcher: return run_matcher_eval(m, opt);
    case io::EvalKind::kBlackbox: return run_blackbox_eval(m, opt);
  }
  throw InvalidArgument("unknown evaluation kind");
}

}  // namespace fpeval::eval
