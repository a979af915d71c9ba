#ifndef PARSEL_IO_UTIL_H
#define PARSEL_IO_UTIL_H

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace parsel {

// Data/file problems (bad input, missing artifact, version mismatch).
class io_error : public std::runtime_error {
 public:
  explicit io_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Caller broke an operation contract.
class contract_error : public std::invalid_argument {
 public:
  explicit contract_error(const std::string& msg) : std::invalid_argument(msg) {}
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw contract_error(msg);
}

std::vector<std::string> split(const std::string& s, char delim);
std::string join(const std::vector<std::string>& parts, const std::string& sep);
std::string trim(const std::string& s);

// Round-trip decimal rendering of a double (17 significant digits).
std::string format_double(double v);
// Fixed-point rendering with the given fraction digits.
std::string format_fixed(double v, int digits);

// Little-endian binary primitives. All model/parameter files go through
// these so the on-disk layout is platform independent.
void write_u32(std::ostream& os, uint32_t v);
void write_u64(std::ostream& os, uint64_t v);
void write_f64(std::ostream& os, double v);
void write_string(std::ostream& os, const std::string& s);
uint32_t read_u32(std::istream& is);
uint64_t read_u64(std::istream& is);
double read_f64(std::istream& is);
std::string read_string(std::istream& is);

// Versioned text artifacts start with "# parsel-<kind> v<version>".
std::string artifact_header(const std::string& kind, int version);
// Checks the first line of an already-opened stream; throws io_error on
// mismatch, naming the file.
void expect_artifact_header(std::istream& is, const std::string& kind,
                            int version, const std::string& path);

// Flat "key = value" files ('#' comments, blank lines ignored). Later keys
// override earlier ones.
std::map<std::string, std::string> read_kv_file(const std::string& path);
std::map<std::string, std::string> parse_kv_text(const std::string& text);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);
bool file_exists(const std::string& path);
void ensure_dir(const std::string& path);

// 64-bit FNV-1a over a string, with a fixed artifact-wide seed constant so
// hashed feature spaces are reproducible across runs and machines.
uint64_t fnv1a64(const std::string& s);

// SplitMix64 step; used to derive per-stage RNG seeds from a master seed.
uint64_t mix_seed(uint64_t seed, const std::string& tag);

// Runs fn(0), ..., fn(count-1) on up to `jobs` threads. The first exception
// thrown is rethrown after all workers stop. Callers keep output
// deterministic by writing to preassigned slots indexed by i.
void parallel_for(size_t count, int jobs, const std::function<void(size_t)>& fn);

}  // namespace parsel

#endif
