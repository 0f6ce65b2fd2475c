// Copyright 2026 the bnclab authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "bnclab/instance.h"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

#include "bnclab/errors.h"
#include "bnclab/util.h"

namespace bnclab {

double MipInstance::upper(int j) const {
  if (!var_upper) return std::numeric_limits<double>::infinity();
  return (*var_upper)[static_cast<size_t>(j)];
}

void Validate(const MipInstance& inst) {
  if (inst.m < 1) throw ParameterError("instance needs m >= 1");
  if (inst.n1 < 0 || inst.n2 < 0 || inst.n() < 1) {
    throw ParameterError("instance needs n1, n2 >= 0 and n1 + n2 >= 1");
  }
  const size_t n = static_cast<size_t>(inst.n());
  const size_t m = static_cast<size_t>(inst.m);
  if (inst.a.size() != m * n) {
    throw ValidationError("A has " + std::to_string(inst.a.size()) + " entries, expected " +
                          std::to_string(m * n));
  }
  if (inst.b.size() != m) throw ValidationError("b length does not match m");
  if (inst.c.size() != n) throw ValidationError("c length does not match n");
  if (inst.var_upper && inst.var_upper->size() != n) {
    throw ValidationError("ub length does not match n");
  }
}

uint64_t Digest(const MipInstance& inst) {
  Hasher h;
  h.Add(inst.name).Add(inst.m).Add(inst.n1).Add(inst.n2);
  h.Add(std::span<const double>(inst.a)).Add(std::span<const double>(inst.b));
  h.Add(std::span<const double>(inst.c));
  if (inst.var_upper) h.Add(std::span<const double>(*inst.var_upper));
  return h.digest();
}

std::string_view FamilyName(Family f) {
  switch (f) {
    case Family::kKnapsack:
      return "knapsack";
    case Family::kPacking:
      return "packing";
    case Family::kCovering:
      return "covering";
  }
  return "?";
}

Family ParseFamily(std::string_view name) {
  if (name == "knapsack") return Family::kKnapsack;
  if (name == "packing") return Family::kPacking;
  if (name == "covering") return Family::kCovering;
  throw ParameterError("unknown instance family '" + std::string(name) + "'");
}

MipInstance GenerateInstance(const GeneratorSpec& spec) {
  if (spec.n1 < 0 || spec.n2 < 0 || spec.n1 + spec.n2 < 1) {
    throw ParameterError("generator needs n1 + n2 >= 1");
  }
  if (spec.m < 1) throw ParameterError("generator needs m >= 1");
  if (spec.coeff_lo < 0 || spec.coeff_hi < 1 || spec.coeff_lo > spec.coeff_hi) {
    throw ParameterError("generator needs 0 <= coeff_lo <= coeff_hi, coeff_hi >= 1");
  }
  Rng rng(spec.seed);
  MipInstance inst;
  inst.n1 = spec.n1;
  inst.n2 = spec.n2;
  inst.m = spec.m;
  inst.seed = spec.seed;
  const int n = inst.n();
  inst.name = std::string(FamilyName(spec.family)) + "-" + std::to_string(n) + "x" +
              std::to_string(spec.m) + "-s" + std::to_string(spec.seed);
  inst.a.assign(static_cast<size_t>(spec.m) * n, 0.0);
  inst.b.assign(static_cast<size_t>(spec.m), 0.0);
  inst.c.assign(static_cast<size_t>(n), 0.0);
  inst.var_upper = std::vector<double>(static_cast<size_t>(n), 1.0);

  for (int i = 0; i < spec.m; ++i) {
    int64_t sum = 0;
    int64_t largest = 0;
    for (int j = 0; j < n; ++j) {
      int64_t v = rng.UniformInt(spec.coeff_lo, spec.coeff_hi);
      if (spec.family == Family::kPacking && rng.UniformInt(0, 1) == 0) v = 0;
      inst.a[static_cast<size_t>(i) * n + j] = static_cast<double>(v);
      sum += v;
      largest = std::max(largest, v);
    }
    if (spec.family == Family::kPacking && largest == 0) {
      // Keep every packing row meaningful.
      const int j = static_cast<int>(rng.UniformInt(0, n - 1));
      const int64_t v = rng.UniformInt(std::max(1, spec.coeff_lo), spec.coeff_hi);
      inst.a[static_cast<size_t>(i) * n + j] = static_cast<double>(v);
      sum += v;
      largest = v;
    }
    switch (spec.family) {
      case Family::kKnapsack:
        inst.b[i] = static_cast<double>(sum / 2);
        break;
      case Family::kPacking:
        inst.b[i] = static_cast<double>(std::max(largest, sum / 2));
        break;
      case Family::kCovering:
        for (int j = 0; j < n; ++j) {
          double& v = inst.a[static_cast<size_t>(i) * n + j];
          v = -v;
        }
        inst.b[i] = -static_cast<double>((sum + 1) / 2);
        break;
    }
  }
  for (int j = 0; j < n; ++j) {
    const double v = static_cast<double>(rng.UniformInt(spec.coeff_lo, spec.coeff_hi));
    inst.c[j] = spec.family == Family::kCovering ? v : -v;
  }
  return inst;
}

namespace {

void AppendNumber(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out += buf;
}

std::vector<std::string> Tokenize(std::string_view line) {
  std::vector<std::string> tokens;
  size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) tokens.emplace_back(line.substr(i, j - i));
    i = j;
  }
  return tokens;
}

double ParseNumber(const std::string& token, int line) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (end == token.c_str() || *end != '\0' || std::isnan(v)) {
    throw ParseError(line, "expected a number, got '" + token + "'");
  }
  return v;
}

int ParseCount(const std::string& token, int line) {
  char* end = nullptr;
  const long v = std::strtol(token.c_str(), &end, 10);
  if (end == token.c_str() || *end != '\0' || v < 0 || v > 1'000'000) {
    throw ParseError(line, "expected a count, got '" + token + "'");
  }
  return static_cast<int>(v);
}

}  // namespace

std::string SerializeInstance(const MipInstance& inst) {
  Validate(inst);
  std::string out;
  out += "mip " + inst.name + " " + std::to_string(inst.m) + " " + std::to_string(inst.n1) + " " +
         std::to_string(inst.n2) + "\n";
  out += "c";
  for (double v : inst.c) {
    out += ' ';
    AppendNumber(out, v);
  }
  out += '\n';
  for (int i = 0; i < inst.m; ++i) {
    out += "row";
    for (double v : inst.row(i)) {
      out += ' ';
      AppendNumber(out, v);
    }
    out += " <= ";
    AppendNumber(out, inst.b[i]);
    out += '\n';
  }
  if (inst.var_upper) {
    out += "ub";
    for (double v : *inst.var_upper) {
      out += ' ';
      AppendNumber(out, v);
    }
    out += '\n';
  }
  if (inst.seed) out += "seed " + std::to_string(*inst.seed) + "\n";
  return out;
}

MipInstance ParseInstance(std::string_view text) {
  MipInstance inst;
  bool have_header = false;
  bool have_c = false;
  int rows_read = 0;
  int line_no = 0;
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    const auto tokens = Tokenize(line);
    if (tokens.empty() || tokens[0][0] == '#') continue;
    const std::string& key = tokens[0];
    if (!have_header) {
      if (key != "mip" || tokens.size() != 5) {
        throw ParseError(line_no, "expected header 'mip <name> <m> <n1> <n2>'");
      }
      inst.name = tokens[1];
      inst.m = ParseCount(tokens[2], line_no);
      inst.n1 = ParseCount(tokens[3], line_no);
      inst.n2 = ParseCount(tokens[4], line_no);
      have_header = true;
      continue;
    }
    const size_t values = tokens.size() - 1;
    if (key == "c") {
      if (have_c) throw ParseError(line_no, "duplicate 'c' line");
      if (values != static_cast<size_t>(inst.n())) {
        throw ValidationError("line " + std::to_string(line_no) + ": c has " +
                              std::to_string(values) + " values, expected " +
                              std::to_string(inst.n()));
      }
      for (size_t k = 1; k < tokens.size(); ++k) inst.c.push_back(ParseNumber(tokens[k], line_no));
      have_c = true;
    } else if (key == "row") {
      if (tokens.size() < 3 || tokens[tokens.size() - 2] != "<=") {
        throw ParseError(line_no, "expected 'row <coefficients> <= <rhs>'");
      }
      if (rows_read == inst.m) {
        throw ValidationError("line " + std::to_string(line_no) +
                              ": more than m = " + std::to_string(inst.m) + " rows");
      }
      const size_t coeffs = tokens.size() - 3;
      if (coeffs != static_cast<size_t>(inst.n())) {
        throw ValidationError("line " + std::to_string(line_no) + ": row has " +
                              std::to_string(coeffs) + " coefficients, expected " +
                              std::to_string(inst.n()));
      }
      for (size_t k = 1; k <= coeffs; ++k) inst.a.push_back(ParseNumber(tokens[k], line_no));
      inst.b.push_back(ParseNumber(tokens.back(), line_no));
      ++rows_read;
    } else if (key == "ub") {
      if (inst.var_upper) throw ParseError(line_no, "duplicate 'ub' line");
      if (values != static_cast<size_t>(inst.n())) {
        throw ValidationError("line " + std::to_string(line_no) + ": ub has " +
                              std::to_string(values) + " values, expected " +
                              std::to_string(inst.n()));
      }
      std::vector<double> ub;
      for (size_t k = 1; k < tokens.size(); ++k) ub.push_back(ParseNumber(tokens[k], line_no));
      inst.var_upper = std::move(ub);
    } else if (key == "seed") {
      if (values != 1) throw ParseError(line_no, "expected 'seed <u64>'");
      char* end = nullptr;
      errno = 0;
      const unsigned long long s = std::strtoull(tokens[1].c_str(), &end, 10);
      if (*end != '\0' || errno != 0 || tokens[1][0] == '-') {
        throw ParseError(line_no, "bad seed '" + tokens[1] + "'");
      }
      inst.seed = static_cast<uint64_t>(s);
    } else {
      throw ParseError(line_no, "unknown record '" + key + "'");
    }
  }
  if (!have_header) throw ParseError(line_no, "missing 'mip' header");
  if (!have_c) throw ParseError(line_no, "missing 'c' line");
  if (rows_read != inst.m) {
    throw ValidationError("expected " + std::to_string(inst.m) + " rows, found " +
                          std::to_string(rows_read));
  }
  Validate(inst);
  return inst;
}

MipInstance ReadInstanceFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ParseInstance(ss.str());
}

void WriteInstanceFile(const MipInstance& inst, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << SerializeInstance(inst);
  if (!out) throw Error("write failed: " + path);
}

bool IsFeasible(const MipInstance& inst, std::span<const double> x, double tol) {
  for (int j = 0; j < inst.n(); ++j) {
    if (x[j] < -tol || x[j] > inst.upper(j) + tol) return false;
  }
  for (int i = 0; i < inst.m; ++i) {
    double lhs = 0.0;
    const auto r = inst.row(i);
    for (int j = 0; j < inst.n(); ++j) lhs += r[j] * x[j];
    if (lhs > inst.b[i] + tol) return false;
  }
  return true;
}

namespace {

// Per-coordinate value lists for the enumeration box.
std::vector<std::vector<double>> EnumerationAxes(const MipInstance& inst, std::optional<int> grid) {
  Validate(inst);
  if (inst.n2 > 0 && !grid) {
    throw RefusedError("continuous variables need a grid resolution for enumeration");
  }
  if (grid && *grid < 1) throw ParameterError("grid resolution must be >= 1");
  std::vector<std::vector<double>> axes;
  double points = 1.0;
  for (int j = 0; j < inst.n(); ++j) {
    const double u = inst.upper(j);
    if (!std::isfinite(u)) throw RefusedError("variable " + std::to_string(j) + " is unbounded");
    std::vector<double> axis;
    if (inst.is_integer(j)) {
      const double top = std::floor(u + 1e-9);
      if (top + 1 > static_cast<double>(kMaxEnumerationPoints)) {
        throw RefusedError("enumeration box too large");
      }
      for (double v = 0; v <= top; v += 1.0) axis.push_back(v);
    } else {
      for (int g = 0; g <= *grid; ++g) axis.push_back(u * g / *grid);
    }
    if (axis.empty()) axis.push_back(0.0);
    points *= static_cast<double>(axis.size());
    if (points > static_cast<double>(kMaxEnumerationPoints)) {
      throw RefusedError("enumeration box too large");
    }
    axes.push_back(std::move(axis));
  }
  return axes;
}

template <typename Visit>
void WalkBox(const std::vector<std::vector<double>>& axes, Visit&& visit) {
  const size_t n = axes.size();
  std::vector<size_t> idx(n, 0);
  std::vector<double> x(n);
  for (size_t j = 0; j < n; ++j) x[j] = axes[j][0];
  while (true) {
    visit(std::span<const double>(x));
    // Odometer with the last coordinate fastest gives lexicographic order.
    size_t j = n;
    while (j > 0) {
      --j;
      if (++idx[j] < axes[j].size()) {
        x[j] = axes[j][idx[j]];
        break;
      }
      idx[j] = 0;
      x[j] = axes[j][0];
      if (j == 0) return;
    }
  }
}

}  // namespace

IntegerOptimum EnumerateIntegerOptimum(const MipInstance& inst, std::optional<int> grid) {
  const auto axes = EnumerationAxes(inst, grid);
  IntegerOptimum best;
  best.approximate = inst.n2 > 0;
  WalkBox(axes, [&](std::span<const double> x) {
    if (!IsFeasible(inst, x, kOracleFeasTol)) return;
    double value = 0.0;
    for (int j = 0; j < inst.n(); ++j) value += inst.c[j] * x[j];
    if (best.status == IntegerOptimum::Status::kInfeasible || value < best.value - 1e-9) {
      best.status = IntegerOptimum::Status::kOptimal;
      best.value = value;
      best.x.assign(x.begin(), x.end());
    }
  });
  return best;
}

void ForEachFeasibleIntegerPoint(const MipInstance& inst,
                                 const std::function<void(std::span<const double>)>& visit) {
  if (inst.n2 > 0) throw RefusedError("point enumeration needs a pure integer instance");
  const auto axes = EnumerationAxes(inst, std::nullopt);
  WalkBox(axes, [&](std::span<const double> x) {
    if (IsFeasible(inst, x, kOracleFeasTol)) visit(x);
  });
}

}  // namespace bnclab
