#include "mkdet/model_io.hpp"

#include <array>
#include <charconv>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "mkdet/error.hpp"

namespace mkdet {
namespace {

void put(std::ostream& out, double v) {
  std::array<char, 32> buf{};
  const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  out.write(buf.data(), end - buf.data());
}

void put_vector(std::ostream& out, std::string_view tag, const std::vector<double>& values) {
  out << tag;
  for (double v : values) {
    out << ' ';
    put(out, v);
  }
  out << '\n';
}

class TokenReader {
 public:
  TokenReader(std::istream& in, std::string_view what) : in_(in), what_(what) {}

  std::string word() {
    std::string s;
    if (!(in_ >> s)) fail("unexpected end of file");
    return s;
  }

  void expect(std::string_view w) {
    const std::string got = word();
    if (got != w) fail("expected '" + std::string(w) + "', got '" + got + "'");
  }

  double real() {
    const std::string s = word();
    double v = 0.0;
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || end != s.data() + s.size()) fail("bad number '" + s + "'");
    return v;
  }

  std::uint64_t count() {
    const std::string s = word();
    std::uint64_t v = 0;
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || end != s.data() + s.size()) fail("bad count '" + s + "'");
    return v;
  }

  std::uint64_t hex() {
    const std::string s = word();
    std::uint64_t v = 0;
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v, 16);
    if (ec != std::errc{} || end != s.data() + s.size()) fail("bad hash '" + s + "'");
    return v;
  }

  int integer() {
    const std::string s = word();
    int v = 0;
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || end != s.data() + s.size()) fail("bad integer '" + s + "'");
    return v;
  }

  std::vector<double> reals(std::size_t n) {
    std::vector<double> v(n);
    for (auto& x : v) x = real();
    return v;
  }

  void header(std::string_view format) {
    std::string line;
    if (!std::getline(in_, line) || line != format) fail("missing '" + std::string(format) + "' header");
  }

  [[noreturn]] void fail(const std::string& msg) const { throw DataError(std::string(what_) + ": " + msg); }

 private:
  std::istream& in_;
  std::string_view what_;
};

struct Fnv {
  std::uint64_t h = 1469598103934665603ULL;
  void bytes(const void* p, std::size_t n) {
    const auto* c = static_cast<const unsigned char*>(p);
    for (std::size_t k = 0; k < n; ++k) h = (h ^ c[k]) * 1099511628211ULL;
  }
  template <class T>
  void value(T v) {
    bytes(&v, sizeof v);
  }
  void vec(const std::vector<double>& v) {
    value(v.size());
    bytes(v.data(), v.size() * sizeof(double));
  }
};

}  // namespace

void write_model(std::ostream& out, const SvmModel& model) {
  out << kModelFormat << '\n';
  out << "eta ";
  put(out, model.kernel.eta);
  out << "\ndistance " << to_string(model.kernel.distance) << "\nbias ";
  put(out, model.bias);
  out << "\nrounds_run " << model.rounds_run << "\nconverged " << int(model.converged) << "\nsmo_converged "
      << int(model.smo_converged) << "\ndim " << model.dim() << "\nforegrounds " << model.fg_table.size() << '\n';
  for (const auto& e : model.fg_table.entries()) put_vector(out, "fg " + std::to_string(e.subclass), e.x);
  out << "support " << model.support.size() << '\n';
  for (std::size_t s = 0; s < model.support.size(); ++s) {
    const auto& t = model.support[s];
    out << "sv " << t.label << ' ' << t.fg_index << ' ';
    put(out, model.signed_weights[s]);
    // Foreground tuples are stored by reference to their table entry.
    if (t.label == 1 && t.fg_index < model.fg_table.size() && t.x == model.fg_table[t.fg_index].x) {
      out << " fg\n";
    } else {
      put_vector(out, " x", t.x);
    }
  }
  out << "end\n";
}

SvmModel read_model(std::istream& in) {
  TokenReader r(in, "model file");
  r.header(kModelFormat);
  SvmModel m;
  r.expect("eta");
  m.kernel.eta = r.real();
  r.expect("distance");
  m.kernel.distance = parse_distance_mode(r.word());
  r.expect("bias");
  m.bias = r.real();
  r.expect("rounds_run");
  m.rounds_run = r.count();
  r.expect("converged");
  m.converged = r.count() != 0;
  r.expect("smo_converged");
  m.smo_converged = r.count() != 0;
  r.expect("dim");
  const std::size_t dim = r.count();
  r.expect("foregrounds");
  const std::size_t nf = r.count();
  for (std::size_t i = 0; i < nf; ++i) {
    r.expect("fg");
    const int v = r.integer();
    m.fg_table.add(r.reals(dim), v);
  }
  r.expect("support");
  const std::size_t ns = r.count();
  for (std::size_t s = 0; s < ns; ++s) {
    r.expect("sv");
    TrainingTuple t;
    t.label = r.integer();
    t.fg_index = r.count();
    m.signed_weights.push_back(r.real());
    const std::string kind = r.word();
    if (kind == "fg") {
      t.x = m.fg_table.at(t.fg_index).x;
    } else if (kind == "x") {
      t.x = r.reals(dim);
    } else {
      r.fail("bad support vector kind '" + kind + "'");
    }
    m.support.push_back(std::move(t));
  }
  r.expect("end");
  m.validate();
  return m;
}

void save_model(const SvmModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write model file " + path.string());
  write_model(out, model);
  if (!out) throw DataError("failed writing model file " + path.string());
}

SvmModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model file " + path.string());
  return read_model(in);
}

void write_family(std::ostream& out, const DetectorFamily& family) {
  out << kFamilyFormat << '\n';
  std::array<char, 20> buf{};
  const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), family.model_hash, 16);
  out << "model_hash " << std::string_view(buf.data(), end - buf.data()) << '\n';
  out << "shared_sv_count " << family.shared_sv_count << "\ndim " << family.dim() << "\ndetectors "
      << family.size() << '\n';
  for (const auto& d : family.detectors) {
    out << "detector " << d.fg_index << ' ' << d.subclass << ' ';
    put(out, d.bias);
    out << '\n';
    put_vector(out, "w", d.w);
    put_vector(out, "alpha", d.alpha_weights);
  }
  out << "end\n";
}

DetectorFamily read_family(std::istream& in) {
  TokenReader r(in, "family file");
  r.header(kFamilyFormat);
  DetectorFamily f;
  r.expect("model_hash");
  f.model_hash = r.hex();
  r.expect("shared_sv_count");
  f.shared_sv_count = r.count();
  r.expect("dim");
  const std::size_t dim = r.count();
  r.expect("detectors");
  const std::size_t n = r.count();
  for (std::size_t k = 0; k < n; ++k) {
    LinearDetector d;
    r.expect("detector");
    d.fg_index = r.count();
    d.subclass = r.integer();
    d.bias = r.real();
    r.expect("w");
    d.w = r.reals(dim);
    r.expect("alpha");
    d.alpha_weights = r.reals(f.shared_sv_count);
    f.detectors.push_back(std::move(d));
  }
  r.expect("end");
  f.validate();
  return f;
}

void save_family(const DetectorFamily& family, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write family file " + path.string());
  write_family(out, family);
  if (!out) throw DataError("failed writing family file " + path.string());
}

DetectorFamily load_family(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open family file " + path.string());
  return read_family(in);
}

std::uint64_t model_hash(const SvmModel& model) {
  Fnv h;
  h.value(model.kernel.eta);
  h.value(static_cast<int>(model.kernel.distance));
  h.value(model.bias);
  for (const auto& e : model.fg_table.entries()) {
    h.value(e.subclass);
    h.vec(e.x);
  }
  for (std::size_t s = 0; s < model.support.size(); ++s) {
    h.value(model.support[s].label);
    h.value(model.support[s].fg_index);
    h.value(model.signed_weights[s]);
    h.vec(model.support[s].x);
  }
  return h.h;
}

}  // namespace mkdet
