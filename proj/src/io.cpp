#include "hprqp/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace hprqp {

namespace {

using nlohmann::json;

double parse_num(const std::string& tok, long line) {
  std::string t = tok;
  for (char& ch : t)
    if (ch == 'D' || ch == 'd') ch = 'E';  // Fortran exponents
  const char* begin = t.c_str();
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0')
    throw ParseError("expected a number, got '" + tok + "'", line);
  return v;
}

std::string fmt_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string upper(std::string s) {
  for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

struct Line {
  std::vector<std::string> f;
  bool header = false;  // content starts at column 1
  long no = 0;
};

std::vector<Line> tokenize(const std::string& text) {
  std::vector<Line> out;
  std::istringstream in(text);
  std::string raw;
  long no = 0;
  while (std::getline(in, raw)) {
    ++no;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    if (raw.empty() || raw[0] == '*') continue;
    Line ln;
    ln.no = no;
    ln.header = !std::isspace(static_cast<unsigned char>(raw[0]));
    std::istringstream ls(raw);
    std::string tok;
    while (ls >> tok) ln.f.push_back(tok);
    if (ln.f.empty()) continue;
    out.push_back(std::move(ln));
  }
  return out;
}

}  // namespace

QpsDocument parse_qps(const std::string& text) {
  QpsDocument doc;
  const auto lines = tokenize(text);
  if (lines.empty()) throw ParseError("empty file", 1);

  enum Section { None, Rows, Columns, Rhs, Ranges, Bounds, Quad, Done };
  Section sec = None;
  int sec_rank = 0;
  bool saw_end = false;
  long quad_line = 0;
  std::vector<Triplet> crows;
  std::map<std::string, double> cvals;
  struct BoundRec {
    std::string type, col;
    double val;
    long line;
  };
  std::vector<BoundRec> bounds;
  std::vector<double> rhs_v, range_v;
  std::vector<bool> has_range_v;
  bool quad_is_qmatrix = false;

  auto section_rank = [](const std::string& s) {
    if (s == "ROWS") return 1;
    if (s == "COLUMNS") return 2;
    if (s == "RHS") return 3;
    if (s == "RANGES") return 4;
    if (s == "BOUNDS") return 5;
    if (s == "QUADOBJ" || s == "QMATRIX") return 6;
    return -1;
  };

  for (const Line& ln : lines) {
    if (saw_end) break;  // content after ENDATA is ignored
    if (ln.header) {
      const std::string key = upper(ln.f[0]);
      if (key == "NAME") {
        if (ln.f.size() > 1) doc.name = ln.f[1];
        continue;
      }
      if (key == "ENDATA") {
        saw_end = true;
        continue;
      }
      const int rank = section_rank(key);
      if (rank < 0) throw ParseError("unknown section '" + ln.f[0] + "'", ln.no);
      if (rank <= sec_rank)
        throw ParseError("section '" + key + "' out of order", ln.no);
      sec_rank = rank;
      sec = static_cast<Section>(rank);
      if (rank == 6) {
        quad_is_qmatrix = key == "QMATRIX";
        doc.has_quad = true;
        quad_line = ln.no;
      }
      continue;
    }

    switch (sec) {
      case Rows: {
        if (ln.f.size() != 2) throw ParseError("ROWS line needs 'type name'", ln.no);
        const std::string type = upper(ln.f[0]);
        if (type.size() != 1 || std::string("NELG").find(type[0]) == std::string::npos)
          throw ParseError("row type must be one of N,E,L,G", ln.no);
        const std::string& name = ln.f[1];
        if (type[0] == 'N') {
          if (!doc.objective_row.empty())
            throw ParseError("duplicate objective (N) row", ln.no);
          doc.objective_row = name;
        } else {
          if (doc.row_index.count(name))
            throw ParseError("duplicate row '" + name + "'", ln.no);
          doc.row_index[name] = static_cast<Index>(doc.row_type.size());
          doc.row_type.push_back(type[0]);
          rhs_v.push_back(0.0);
          range_v.push_back(0.0);
          has_range_v.push_back(false);
        }
        doc.rows.emplace_back(type[0], name);
        break;
      }
      case Columns: {
        if (ln.f.size() != 3 && ln.f.size() != 5)
          throw ParseError("COLUMNS line needs 'col row val [row val]'", ln.no);
        const std::string& col = ln.f[0];
        if (upper(col) == "MARKER" ||
            (ln.f.size() >= 3 && upper(ln.f[1]).find("MARKER") != std::string::npos))
          throw ParseError("integer markers are unsupported", ln.no);
        auto it = doc.col_index.find(col);
        Index j;
        if (it == doc.col_index.end()) {
          j = static_cast<Index>(doc.col_index.size());
          doc.col_index[col] = j;
        } else {
          j = it->second;
        }
        for (std::size_t p = 1; p + 1 < ln.f.size(); p += 2) {
          const std::string& row = ln.f[p];
          const double v = parse_num(ln.f[p + 1], ln.no);
          if (row == doc.objective_row && !doc.objective_row.empty()) {
            cvals[col] += v;
          } else {
            auto rit = doc.row_index.find(row);
            if (rit == doc.row_index.end())
              throw ParseError("undeclared row '" + row + "'", ln.no);
            crows.emplace_back(rit->second, j, v);
          }
        }
        break;
      }
      case Rhs: {
        if (ln.f.size() != 3 && ln.f.size() != 5)
          throw ParseError("RHS line needs 'set row val [row val]'", ln.no);
        for (std::size_t p = 1; p + 1 < ln.f.size(); p += 2) {
          const std::string& row = ln.f[p];
          const double v = parse_num(ln.f[p + 1], ln.no);
          if (row == doc.objective_row && !doc.objective_row.empty()) {
            doc.obj_rhs += v;
            continue;
          }
          auto rit = doc.row_index.find(row);
          if (rit == doc.row_index.end())
            throw ParseError("undeclared row '" + row + "'", ln.no);
          rhs_v[static_cast<std::size_t>(rit->second)] += v;
        }
        break;
      }
      case Ranges: {
        if (ln.f.size() != 3 && ln.f.size() != 5)
          throw ParseError("RANGES line needs 'set row val [row val]'", ln.no);
        for (std::size_t p = 1; p + 1 < ln.f.size(); p += 2) {
          auto rit = doc.row_index.find(ln.f[p]);
          if (rit == doc.row_index.end())
            throw ParseError("undeclared row '" + ln.f[p] + "'", ln.no);
          const auto idx = static_cast<std::size_t>(rit->second);
          range_v[idx] = parse_num(ln.f[p + 1], ln.no);
          has_range_v[idx] = true;
        }
        break;
      }
      case Bounds: {
        const std::string type = upper(ln.f[0]);
        const bool needs_val = type == "LO" || type == "UP" || type == "FX";
        const bool no_val = type == "FR" || type == "MI" || type == "PL";
        if (!needs_val && !no_val)
          throw ParseError("unsupported bound type '" + ln.f[0] + "'", ln.no);
        if (ln.f.size() != (needs_val ? 4u : 3u))
          throw ParseError("malformed BOUNDS line", ln.no);
        const std::string& col = ln.f[2];
        if (!doc.col_index.count(col))
          throw ParseError("undeclared column '" + col + "'", ln.no);
        bounds.push_back(
            {type, col, needs_val ? parse_num(ln.f[3], ln.no) : 0.0, ln.no});
        break;
      }
      case Quad: {
        if (ln.f.size() != 3)
          throw ParseError("quadratic line needs 'col col val'", ln.no);
        auto i1 = doc.col_index.find(ln.f[0]);
        auto i2 = doc.col_index.find(ln.f[1]);
        if (i1 == doc.col_index.end() || i2 == doc.col_index.end())
          throw ParseError("quadratic entry references undeclared column", ln.no);
        const double v = parse_num(ln.f[2], ln.no);
        doc.quad.emplace_back(i1->second, i2->second, v);
        if (!quad_is_qmatrix && i1->second != i2->second)
          doc.quad.emplace_back(i2->second, i1->second, v);
        break;
      }
      default:
        throw ParseError("data line outside any section", ln.no);
    }
  }
  if (!saw_end) throw ParseError("missing ENDATA", lines.back().no);
  if (doc.objective_row.empty())
    throw ParseError("missing objective (N) row", lines.back().no);
  if (doc.col_index.empty())
    throw ParseError("no columns declared", lines.back().no);

  const Index n = static_cast<Index>(doc.col_index.size());
  const Index m = static_cast<Index>(doc.row_type.size());
  doc.entries = std::move(crows);
  doc.c = Vec::Zero(n);
  for (const auto& [name, v] : cvals) doc.c[doc.col_index.at(name)] = v;
  doc.rhs = Eigen::Map<Vec>(rhs_v.data(), m);
  doc.range = Eigen::Map<Vec>(range_v.data(), m);
  doc.has_range = has_range_v;
  doc.col_lower = Vec::Zero(n);
  doc.col_upper = Vec::Constant(n, kInf);
  std::vector<bool> lower_set(static_cast<std::size_t>(n), false);
  for (const auto& b : bounds) {
    const Index j = doc.col_index.at(b.col);
    if (b.type == "LO") {
      doc.col_lower[j] = b.val;
      lower_set[static_cast<std::size_t>(j)] = true;
    } else if (b.type == "UP") {
      doc.col_upper[j] = b.val;
      // classic MPS rule: a negative upper bound with no explicit lower
      // bound frees the lower side
      if (b.val < 0.0 && !lower_set[static_cast<std::size_t>(j)])
        doc.col_lower[j] = -kInf;
    } else if (b.type == "FX") {
      doc.col_lower[j] = doc.col_upper[j] = b.val;
      lower_set[static_cast<std::size_t>(j)] = true;
    } else if (b.type == "FR") {
      doc.col_lower[j] = -kInf;
      doc.col_upper[j] = kInf;
      lower_set[static_cast<std::size_t>(j)] = true;
    } else if (b.type == "MI") {
      doc.col_lower[j] = -kInf;
      lower_set[static_cast<std::size_t>(j)] = true;
    } else if (b.type == "PL") {
      doc.col_upper[j] = kInf;
    }
    if (doc.col_lower[j] > doc.col_upper[j])
      throw ParseError("infeasible bounds for column '" + b.col + "'", b.line);
  }
  if (quad_is_qmatrix) {
    SpMat q(n, n);
    q.setFromTriplets(doc.quad.begin(), doc.quad.end());
    SpMat qt = SpMat(q.transpose());
    SpMat diff = q - qt;
    double worst = 0.0;
    for (Index j = 0; j < diff.outerSize(); ++j)
      for (SpMat::InnerIterator it(diff, j); it; ++it)
        worst = std::max(worst, std::abs(it.value()));
    if (worst > 1e-10)
      throw ParseError("QMATRIX is not symmetric", quad_line);
  }
  return doc;
}

CcqpProblem QpsDocument::to_problem() const {
  const Index n = static_cast<Index>(col_index.size());
  const Index m = static_cast<Index>(row_type.size());
  SpMat a(m, n);
  a.setFromTriplets(entries.begin(), entries.end());
  SpMat q(n, n);
  q.setFromTriplets(quad.begin(), quad.end());

  Vec kl(m), ku(m);
  for (Index i = 0; i < m; ++i) {
    const double r = rhs[i];
    switch (row_type[static_cast<std::size_t>(i)]) {
      case 'E': kl[i] = ku[i] = r; break;
      case 'L': kl[i] = -kInf; ku[i] = r; break;
      case 'G': kl[i] = r; ku[i] = kInf; break;
      default: throw Error("corrupt row type");
    }
    if (has_range[static_cast<std::size_t>(i)]) {
      const double v = range[i];
      switch (row_type[static_cast<std::size_t>(i)]) {
        case 'E':
          if (v >= 0.0) ku[i] = r + v;
          else kl[i] = r + v;
          break;
        case 'L': kl[i] = r - std::abs(v); break;
        case 'G': ku[i] = r + std::abs(v); break;
      }
    }
  }

  return make_ccqp(PsdOperator::explicit_sparse(std::move(q)), std::move(a),
                   c, Box(std::move(kl), std::move(ku)),
                   CompositeTerm::box_indicator(col_lower, col_upper),
                   name.empty() ? "qps" : name, -obj_rhs);
}

CcqpProblem read_qps(const std::string& text) {
  return parse_qps(text).to_problem();
}

CcqpProblem read_qps_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return read_qps(buf.str());
}

SpMat read_matrix_market(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::string raw;
  long no = 0;
  if (!std::getline(in, raw)) throw ParseError("empty matrix market file", 1);
  ++no;
  {
    std::istringstream hs(raw);
    std::string banner, obj, fmt, field, sym;
    hs >> banner >> obj >> fmt >> field >> sym;
    if (banner != "%%MatrixMarket" || upper(obj) != "MATRIX")
      throw ParseError("bad matrix market banner", no);
    if (upper(fmt) != "COORDINATE" || upper(field) != "REAL")
      throw ParseError("only coordinate real matrices are supported", no);
    const std::string s = upper(sym);
    if (s != "GENERAL" && s != "SYMMETRIC")
      throw ParseError("only general or symmetric matrices are supported", no);
    bool symmetric = s == "SYMMETRIC";

    long rows = -1, cols = -1, nnz = -1;
    while (std::getline(in, raw)) {
      ++no;
      if (raw.empty() || raw[0] == '%') continue;
      std::istringstream ls(raw);
      if (!(ls >> rows >> cols >> nnz))
        throw ParseError("bad size line", no);
      break;
    }
    if (rows < 0 || cols < 0 || nnz < 0)
      throw ParseError("missing size line", no);
    if (rows > 100000000 || cols > 100000000 ||
        static_cast<double>(nnz) > static_cast<double>(rows) * static_cast<double>(cols))
      throw ParseError("implausible matrix dimensions", no);

    std::vector<Triplet> tr;
    long seen = 0;
    while (seen < nnz) {
      if (!std::getline(in, raw)) throw ParseError("truncated entry list", no);
      ++no;
      if (raw.empty() || raw[0] == '%') continue;
      std::istringstream ls(raw);
      long i = 0, j = 0;
      std::string vtok;
      if (!(ls >> i >> j >> vtok)) throw ParseError("bad entry line", no);
      if (i < 1 || i > rows || j < 1 || j > cols)
        throw ParseError("entry index out of range", no);
      const double v = parse_num(vtok, no);
      tr.emplace_back(i - 1, j - 1, v);
      if (symmetric && i != j) tr.emplace_back(j - 1, i - 1, v);
      ++seen;
    }
    SpMat a(rows, cols);
    a.setFromTriplets(tr.begin(), tr.end());
    return a;
  }
}

void write_matrix_market(const SpMat& a, const std::filesystem::path& path,
                         bool symmetric) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "%%MatrixMarket matrix coordinate real "
      << (symmetric ? "symmetric" : "general") << "\n";
  std::vector<std::string> lines;
  long nnz = 0;
  std::ostringstream body;
  for (Index j = 0; j < a.outerSize(); ++j)
    for (SpMat::InnerIterator it(a, j); it; ++it) {
      if (symmetric && it.row() < it.col()) continue;  // store lower triangle
      body << (it.row() + 1) << ' ' << (it.col() + 1) << ' '
           << fmt_double(it.value()) << '\n';
      ++nnz;
    }
  out << a.rows() << ' ' << a.cols() << ' ' << nnz << '\n' << body.str();
  if (!out) throw Error("write failed: " + path.string());
}

namespace {

Vec read_vector_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  long count = -1;
  std::string tok;
  if (!(in >> count) || count < 0 || count > 100000000)
    throw ParseError("bad vector length in " + path.string(), 1);
  Vec v(count);
  for (long i = 0; i < count; ++i) {
    if (!(in >> tok)) throw ParseError("truncated vector " + path.string(), i + 2);
    v[i] = parse_num(tok, i + 2);
  }
  return v;
}

void write_vector_file(const Vec& v, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << v.size() << '\n';
  for (Index i = 0; i < v.size(); ++i) out << fmt_double(v[i]) << '\n';
}

Box read_bounds_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  long count = -1;
  if (!(in >> count) || count < 0 || count > 100000000)
    throw ParseError("bad bounds length in " + path.string(), 1);
  Vec lo(count), hi(count);
  std::string t1, t2;
  for (long i = 0; i < count; ++i) {
    if (!(in >> t1 >> t2))
      throw ParseError("truncated bounds " + path.string(), i + 2);
    lo[i] = parse_num(t1, i + 2);
    hi[i] = parse_num(t2, i + 2);
  }
  return Box(std::move(lo), std::move(hi));
}

void write_bounds_file(const Box& b, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << b.dim() << '\n';
  for (Index i = 0; i < b.dim(); ++i)
    out << fmt_double(b.lower[i]) << ' ' << fmt_double(b.upper[i]) << '\n';
}

}  // namespace

CcqpProblem read_matrix_bundle(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir))
    throw Error(dir.string() + " is not a directory");
  SpMat a = read_matrix_market(dir / "A.mtx");
  const Index m = a.rows(), n = a.cols();
  PsdOperator q = PsdOperator::zero(n);
  if (std::filesystem::exists(dir / "Q.mtx")) {
    SpMat qm = read_matrix_market(dir / "Q.mtx");
    if (qm.rows() != n || qm.cols() != n)
      throw Error("Q.mtx dimension does not match A.mtx columns");
    q = PsdOperator::explicit_sparse(std::move(qm));
  }
  Vec c = read_vector_file(dir / "c.vec");
  if (c.size() != n) throw Error("c.vec length does not match A.mtx columns");
  Box k = read_bounds_file(dir / "K.bounds");
  if (k.dim() != m) throw Error("K.bounds length does not match A.mtx rows");

  std::string name = dir.filename().string();
  double obj_const = 0.0;
  CompositeTerm phi = CompositeTerm::box_indicator(Vec::Constant(n, -kInf),
                                                   Vec::Constant(n, kInf));
  bool phi_from_meta = false;
  if (std::filesystem::exists(dir / "meta.json")) {
    std::ifstream in(dir / "meta.json");
    json meta = json::parse(in, nullptr, false);
    if (meta.is_discarded()) throw ParseError("malformed meta.json", 1);
    name = meta.value("name", name);
    obj_const = meta.value("obj_const", 0.0);
    if (meta.contains("phi")) {
      const auto& p = meta["phi"];
      if (p.value("kind", "box") == "l1") {
        phi = CompositeTerm::weighted_l1(p.value("lambda", 1.0), n);
        phi_from_meta = true;
      }
    }
  }
  if (!phi_from_meta && std::filesystem::exists(dir / "X.bounds")) {
    Box xb = read_bounds_file(dir / "X.bounds");
    if (xb.dim() != n) throw Error("X.bounds length does not match columns");
    phi = CompositeTerm::box_indicator(xb.lower, xb.upper);
  }
  return make_ccqp(std::move(q), std::move(a), std::move(c), std::move(k),
                   std::move(phi), std::move(name), obj_const);
}

void write_matrix_bundle(const CcqpProblem& prob,
                         const std::filesystem::path& dir) {
  if (!prob.Q.is_explicit())
    throw Error("cannot serialize a matrix-free operator to a bundle");
  std::filesystem::create_directories(dir);
  write_matrix_market(prob.A, dir / "A.mtx", false);
  if (!prob.Q.is_zero())
    write_matrix_market(prob.Q.matrix(), dir / "Q.mtx", true);
  write_vector_file(prob.c, dir / "c.vec");
  write_bounds_file(prob.K, dir / "K.bounds");
  json meta;
  meta["name"] = prob.name;
  meta["obj_const"] = prob.obj_const;
  if (prob.phi.kind() == CompositeTerm::Kind::BoxIndicator) {
    meta["phi"] = {{"kind", "box"}};
    write_bounds_file(prob.phi.box(), dir / "X.bounds");
  } else {
    meta["phi"] = {{"kind", "l1"}, {"lambda", prob.phi.lambda()}};
  }
  std::ofstream out(dir / "meta.json");
  if (!out) throw Error("cannot write meta.json");
  out << meta.dump(2) << '\n';
}

namespace {

json json_double(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

}  // namespace

std::string results_json(const KktReport& r) {
  json j;
  j["schema_version"] = 1;
  j["status"] = to_string(r.status);
  j["iterations"] = r.iterations;
  j["restarts"] = r.restarts;
  j["primal_obj"] = json_double(r.primal_obj);
  j["dual_obj"] = json_double(r.dual_obj);
  j["eta_gap"] = json_double(r.eta_gap);
  j["eta_p"] = json_double(r.eta_p);
  j["eta_d"] = json_double(r.eta_d);
  j["kkt_block_norms"] = {json_double(r.kkt_block_norms[0]),
                          json_double(r.kkt_block_norms[1]),
                          json_double(r.kkt_block_norms[2]),
                          json_double(r.kkt_block_norms[3])};
  j["sigma_final"] = json_double(r.sigma_final);
  j["lambda_A"] = json_double(r.lambda_A);
  j["lambda_Q"] = json_double(r.lambda_Q);
  j["solve_seconds"] = r.solve_seconds;
  j["data_seconds"] = r.data_seconds;
  return j.dump(2) + "\n";
}

std::string trace_csv(const std::vector<TraceRecord>& trace) {
  std::ostringstream out;
  out << "k,r,t,sigma,R_tilde,eta_gap,eta_p,eta_d,seconds\n";
  for (const auto& t : trace) {
    out << t.k << ',' << t.r << ',' << t.t << ',' << fmt_double(t.sigma) << ','
        << fmt_double(t.r_tilde) << ',' << fmt_double(t.eta_gap) << ','
        << fmt_double(t.eta_p) << ',' << fmt_double(t.eta_d) << ','
        << fmt_double(t.seconds) << '\n';
  }
  return out.str();
}

void write_results(const KktReport& report,
                   const std::vector<TraceRecord>& trace,
                   const std::filesystem::path& prefix) {
  const auto parent = prefix.parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  {
    std::ofstream out(prefix.string() + ".result.json");
    if (!out) throw Error("cannot write " + prefix.string() + ".result.json");
    out << results_json(report);
  }
  {
    std::ofstream out(prefix.string() + ".trace.csv");
    if (!out) throw Error("cannot write " + prefix.string() + ".trace.csv");
    out << trace_csv(trace);
  }
}

}  // namespace hprqp
