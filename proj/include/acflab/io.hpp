#pragma once

// SFLD v1: a plain-text lattice format.
//
//   SFLD v1
//   dim 2
//   shape 257 257
//   spacing 0.0078125
//   origin -1 -1
//   <one value per node, row-major, last axis fastest>
//
// Values are printed with max_digits10 so that a write/read cycle is exact.
// Masks use the same layout with 0/1 values.

#include "acflab/grid.hpp"

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace acflab {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void write_sfld(std::ostream& os, const ScalarField& f);
void write_sfld(std::ostream& os, const DomainMask& m);
ScalarField read_sfld(std::istream& is);
DomainMask read_sfld_mask(std::istream& is);

void save_sfld(const std::string& path, const ScalarField& f);
void save_sfld(const std::string& path, const DomainMask& m);
ScalarField load_sfld(const std::string& path);
DomainMask load_sfld_mask(const std::string& path);

/// Plain CSV with a header row; numbers printed round-trip exact.
void write_csv(std::ostream& os, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

std::string format_double(double v);

}  // namespace acflab
