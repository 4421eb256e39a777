#pragma once

#include <cstdint>
#include <ostream>
#include <random>
#include <vector>

#include "bgc/correct.hpp"
#include "bgc/model_io.hpp"

// Self-check of the correctors against the quadrature oracle on random
// parameter draws inside each family's safe range.

namespace bgc {

struct ValidationCase {
  ModelSpec model;
  double p = 0.0;
};

ValidationCase draw_validation_case(ModelKind kind, std::mt19937_64& rng);

// Closed forms and exact integrals 1e-6, series 1e-3.
double validation_tolerance(ModelKind kind);

struct ValidationRow {
  int draw = 0;
  ValidationCase c;
  double value = 0.0;
  double oracle = 0.0;
  double rel_error = 0.0;
  CorrectionPath path = CorrectionPath::closed_form;
  bool ok = false;
  std::string error;  // set when the corrector or oracle threw
};

std::vector<ValidationRow> run_validation(ModelKind kind, int draws, std::uint64_t seed, const CorrectConfig& cfg = {});

// Columns: draw, model, p, corrected, oracle, rel_error, path, ok.
void write_validation(std::ostream& out, const std::vector<ValidationRow>& rows);

}  // namespace bgc
