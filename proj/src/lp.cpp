#include "posopt/lp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "posopt/io.hpp"

namespace posopt {

namespace {

std::string var_label(const char* base, Index i) {
  return std::string(base) + "_" + std::to_string(i + 1);
}

void push_nonzero(LpRow& row, Index var, double coeff) {
  if (coeff != 0.0) row.terms.push_back({var, coeff});
}

}  // namespace

LpModel build_lp(const ProblemData& prob, const LpBuildOptions& opts) {
  LpModel model;
  model.n = prob.n;
  model.M = prob.M;
  model.var_names.reserve(static_cast<size_t>(prob.n + prob.M));
  for (Index j = 0; j < prob.n; ++j) model.var_names.push_back(var_label("p", j));
  for (Index i = 0; i < prob.M; ++i) model.var_names.push_back(var_label("z", i));

  // Column views of E, gathered once since E is stored row-major.
  std::vector<std::vector<std::pair<Index, double>>> e_cols(
      static_cast<size_t>(prob.n));
  for (Index i = 0; i < prob.E.rows(); ++i) {
    for (SpMatRow::InnerIterator it(prob.E, i); it; ++it) {
      if (it.value() != 0.0) {
        e_cols[static_cast<size_t>(it.col())].emplace_back(i, it.value());
      }
    }
  }

  for (Index k = 0; k < prob.n; ++k) {
    LpRow row;
    row.name = var_label("bell", k);
    row.rhs = prob.s[k];
    Vec coef = Vec::Zero(prob.n);
    coef[k] = 1.0;
    for (SpMat::InnerIterator it(prob.A, k); it; ++it) {
      coef[it.row()] -= it.value();  // (A^T p)_k = sum_j A_jk p_j
    }
    for (Index j = 0; j < prob.n; ++j) push_nonzero(row, j, coef[j]);
    for (const auto& [i, val] : e_cols[static_cast<size_t>(k)]) {
      push_nonzero(row, prob.n + i, val);
    }
    model.rows.push_back(std::move(row));
  }

  for (Index i = 0; i < prob.M; ++i) {
    const SpMat& block = prob.B_blocks[static_cast<size_t>(i)];
    for (Index j = 0; j < block.cols(); ++j) {
      LpRow row;
      row.name = "red_" + std::to_string(i + 1) + "_" + std::to_string(j + 1);
      Vec coef = Vec::Zero(prob.n);
      for (SpMat::InnerIterator it(block, j); it; ++it) {
        coef[it.row()] = opts.literal_printed_form ? it.value() : -it.value();
      }
      row.rhs = opts.literal_printed_form
                    ? -prob.r_blocks[static_cast<size_t>(i)][j]
                    : prob.r_blocks[static_cast<size_t>(i)][j];
      for (Index k = 0; k < prob.n; ++k) push_nonzero(row, k, coef[k]);
      row.terms.push_back({prob.n + i, -1.0});
      model.rows.push_back(std::move(row));
    }
  }
  return model;
}

namespace {

void append_terms(std::ostringstream& os, const std::vector<LpTerm>& terms,
                  const std::vector<std::string>& names) {
  bool first = true;
  for (const auto& term : terms) {
    const double mag = std::abs(term.coeff);
    if (first) {
      if (term.coeff < 0.0) os << "- ";
      first = false;
    } else {
      os << (term.coeff < 0.0 ? " - " : " + ");
    }
    if (mag != 1.0) os << format_double(mag) << " ";
    os << names[static_cast<size_t>(term.var)];
  }
  if (first) os << "0 " << names[0];  // row with no nonzero coefficient
}

}  // namespace

std::string export_lp_text(const LpModel& model) {
  std::ostringstream os;
  os << "\\ posopt linear program export\n";
  os << "Maximize\n obj: ";
  for (Index j = 0; j < model.n; ++j) {
    if (j > 0) os << " + ";
    os << model.var_names[static_cast<size_t>(j)];
  }
  os << "\nSubject To\n";
  for (const auto& row : model.rows) {
    os << " " << row.name << ": ";
    append_terms(os, row.terms, model.var_names);
    os << " <= " << format_double(row.rhs) << "\n";
  }
  os << "Bounds\n";
  for (const auto& name : model.var_names) {
    os << " " << name << " >= 0\n";
  }
  os << "End\n";
  return os.str();
}

std::string export_mps_text(const LpModel& model) {
  // Column-wise entries: objective first, then rows in model order.
  const size_t nvars = static_cast<size_t>(model.num_vars());
  std::vector<std::vector<std::pair<std::string, double>>> columns(nvars);
  for (Index j = 0; j < model.n; ++j) {
    columns[static_cast<size_t>(j)].emplace_back("obj", 1.0);
  }
  for (const auto& row : model.rows) {
    for (const auto& term : row.terms) {
      columns[static_cast<size_t>(term.var)].emplace_back(row.name, term.coeff);
    }
  }

  size_t name_w = 8;
  for (const auto& name : model.var_names) name_w = std::max(name_w, name.size());
  for (const auto& row : model.rows) name_w = std::max(name_w, row.name.size());
  name_w += 2;
  const auto pad = [name_w](const std::string& text) {
    std::string out = text;
    out.resize(std::max(out.size(), name_w), ' ');
    return out;
  };

  std::ostringstream os;
  os << "NAME          posopt\n";
  os << "OBJSENSE\n    MAX\n";
  os << "ROWS\n N  obj\n";
  for (const auto& row : model.rows) os << " L  " << row.name << "\n";
  os << "COLUMNS\n";
  for (size_t v = 0; v < nvars; ++v) {
    for (const auto& [row_name, value] : columns[v]) {
      os << "    " << pad(model.var_names[v]) << pad(row_name)
         << format_double(value) << "\n";
    }
  }
  os << "RHS\n";
  for (const auto& row : model.rows) {
    if (row.rhs != 0.0) {
      os << "    " << pad("rhs") << pad(row.name) << format_double(row.rhs)
         << "\n";
    }
  }
  os << "ENDATA\n";
  return os.str();
}

FeasibilityCheck check_feasible(const LpModel& model, const Vec& p,
                                const Vec& z, double tol) {
  if (p.size() != model.n || z.size() != model.M) {
    throw std::invalid_argument("check_feasible: dimension mismatch");
  }
  Vec x(model.num_vars());
  x.head(model.n) = p;
  x.tail(model.M) = z;

  FeasibilityCheck check;
  check.feasible = true;
  auto consider = [&](double violation, const std::string& name) {
    if (violation > check.max_violation) {
      check.max_violation = violation;
      check.worst_row = name;
    }
    if (violation > tol) check.feasible = false;
  };
  for (const auto& row : model.rows) {
    double lhs = 0.0;
    for (const auto& term : row.terms) {
      lhs += term.coeff * x[term.var];
    }
    consider(lhs - row.rhs, row.name);
  }
  for (Index v = 0; v < model.num_vars(); ++v) {
    consider(-x[v], "bound " + model.var_names[static_cast<size_t>(v)]);
  }
  return check;
}

Certificate certify_optimal(const ProblemData& prob, const Vec& p, double tol) {
  if (p.size() != prob.n) {
    throw std::invalid_argument("certify_optimal: p has wrong length");
  }
  Certificate cert;
  cert.z = Vec::Zero(prob.M);
  for (Index i = 0; i < prob.M; ++i) {
    const SpMat& block = prob.B_blocks[static_cast<size_t>(i)];
    if (block.cols() == 0) continue;
    Vec reduced = prob.r_blocks[static_cast<size_t>(i)] + block.transpose() * p;
    cert.z[i] = -std::min(reduced.minCoeff(), 0.0);
  }

  const LpModel model = build_lp(prob);
  const FeasibilityCheck check = check_feasible(model, p, cert.z, tol);
  cert.feasible = check.feasible;
  cert.max_violation = check.max_violation;
  for (Index k = 0; k < prob.n; ++k) {
    const LpRow& row = model.rows[static_cast<size_t>(k)];
    double lhs = 0.0;
    for (const auto& term : row.terms) {
      lhs += term.coeff * (term.var < prob.n ? p[term.var]
                                             : cert.z[term.var - prob.n]);
    }
    if (std::abs(lhs - row.rhs) <= tol) cert.tight_rows.push_back(k);
  }
  cert.all_bellman_tight =
      static_cast<Index>(cert.tight_rows.size()) == prob.n;
  return cert;
}

}  // namespace posopt
