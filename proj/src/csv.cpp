#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "baton/error.hpp"
#include "baton/io.hpp"

namespace baton {

namespace {

void put_double(std::string& line, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  line += buf;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, const std::string& where) {
  const char* begin = s.c_str();
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(begin, &end);
  // Subnormal results may set ERANGE; they are still exact.
  if (s.empty() || end != begin + s.size()) throw IoError(where + ": bad number '" + s + "'");
  return v;
}

std::uint64_t parse_count(const std::string& s, const std::string& where) {
  const char* begin = s.c_str();
  char* end = nullptr;
  errno = 0;
  const unsigned long long v = std::strtoull(begin, &end, 10);
  if (s.empty() || s[0] == '-' || end != begin + s.size() || errno == ERANGE) {
    throw IoError(where + ": bad count '" + s + "'");
  }
  return v;
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

}  // namespace

void write_samples(const SampleBatch& batch, std::ostream& out) {
  std::string line = "chain_id,step,weight,log_density";
  for (std::size_t k = 0; k < batch.dims(); ++k) line += ",v_" + std::to_string(k + 1);
  out << line << '\n';
  for (std::size_t i = 0; i < batch.size(); ++i) {
    line = std::to_string(batch.chain_ids()[i]) + ',' + std::to_string(batch.steps()[i]) + ',';
    put_double(line, batch.weights()[i]);
    line += ',';
    put_double(line, batch.log_densities()[i]);
    for (double v : batch.row(i)) {
      line += ',';
      put_double(line, v);
    }
    out << line << '\n';
  }
}

void write_samples(const SampleBatch& batch, const std::filesystem::path& path) {
  auto out = open_out(path);
  write_samples(batch, out);
  out.flush();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

SampleBatch read_samples(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) throw IoError(source + ": missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split(line);
  if (header.size() < 4 || header[0] != "chain_id" || header[1] != "step" ||
      header[2] != "weight" || header[3] != "log_density") {
    throw IoError(source + ":1: header must start with chain_id,step,weight,log_density");
  }
  const std::size_t d = header.size() - 4;
  for (std::size_t k = 0; k < d; ++k) {
    if (header[4 + k] != "v_" + std::to_string(k + 1)) {
      throw IoError(source + ":1: expected column v_" + std::to_string(k + 1));
    }
  }
  SampleBatch batch(d);
  std::vector<double> row(d);
  for (std::size_t lineno = 2; std::getline(in, line); ++lineno) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(lineno);
    const auto f = split(line);
    if (f.size() != d + 4) {
      throw IoError(where + ": expected " + std::to_string(d + 4) + " fields, found " +
                    std::to_string(f.size()));
    }
    for (std::size_t k = 0; k < d; ++k) row[k] = parse_double(f[4 + k], where);
    try {
      batch.push_back(row, parse_double(f[2], where), parse_double(f[3], where),
                      parse_count(f[0], where), parse_count(f[1], where));
    } catch (const ContractViolation& e) {
      throw IoError(where + ": " + e.what());
    }
  }
  try {
    batch.validate();
  } catch (const ContractViolation& e) {
    throw IoError(source + ": " + e.what());
  }
  return batch;
}

SampleBatch read_samples(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return read_samples(in, path.string());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
  out.flush();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  write_text(path, j.dump(2) + "\n");
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

}  // namespace baton
