#include "sealpy/memcheck/corpus.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

namespace sealpy::memcheck {
namespace {

constexpr const char* dtoa_vuln = R"(# Balloc(int k) from dtoa.c.
# The freelist fast path is modelled as a call; the size-class test
# "0 <= k <= Kmax" parses as (0 <= k) <= Kmax and never constrains k.
fn balloc(k:int) {
entry:
  zero = const 0
  kmax = const 32
  lower = cmp le zero k
  guard = cmp le lower kmax
  br guard try_freelist mint
try_freelist:
  rv = call freelist_pop(k)
  hit = cmp ne rv null
  br hit reuse mint
reuse:
  ret rv
mint:
  one = const 1
  x = shl one k            # expect: ShiftOverflow
  block = alloc x
  ret block
}
)";

constexpr const char* dtoa_fixed = R"(# Balloc(int k) with the range guard before the shift:
#   if (k > 32 || k < 0) return NULL;
fn balloc(k:int) {
entry:
  zero = const 0
  kmax = const 32
  lower = cmp le zero k
  guard = cmp le lower kmax
  br guard try_freelist mint
try_freelist:
  rv = call freelist_pop(k)
  hit = cmp ne rv null
  br hit reuse mint
reuse:
  ret rv
mint:
  limit = const 32
  too_big = cmp lt limit k
  br too_big fail check_low
check_low:
  floor = const 0
  negative = cmp lt k floor
  br negative fail shift
shift:
  one = const 1
  x = shl one k
  block = alloc x
  ret block
fail:
  nothing = const null
  ret nothing
}
)";

constexpr const char* codemap_vuln = R"(# pypy_jit_codemap_del(addr, size): the predecessor search may find no
# node, and its key is read without a check.
fn codemap_del(addr:int, size:int) {
entry:
  end = add addr size
  one = const 1
  search_key = sub end one
  node = call skiplist_search(search_key)
  r = call pypy_codemap_invalid_set(1)
  key = load node 0        # expect: NullDeref
  r2 = call skiplist_remove(key)
  ret
}
)";

constexpr const char* codemap_fixed = R"(# pypy_jit_codemap_del with the guard
#   if (!node || !node->key || node->key < addr) return NULL;
fn codemap_del(addr:int, size:int) {
entry:
  end = add addr size
  one = const 1
  search_key = sub end one
  node = call skiplist_search(search_key)
  missing = cmp eq node null
  br missing out check_key
check_key:
  key = load node 0
  zero_key = cmp eq key 0
  br zero_key out check_range
check_range:
  below = cmp lt key addr
  br below out remove
remove:
  r = call pypy_codemap_invalid_set(1)
  r2 = call skiplist_remove(key)
  ret
out:
  ret
}
)";

constexpr const char* oob_read = R"(# Reads one element past a four-element buffer.
fn read_past_end() {
entry:
  n = const 4
  buf = alloc n
  i = const 4
  v = load buf i           # expect: BufferOverRead
  free buf
  ret v
}
)";

constexpr const char* oob_write = R"(# Fill loop with an off-by-one bound (<= instead of <).
fn fill(seed:int) {
entry:
  len = const 4
  buf = alloc len
  i = const 0
  jmp head
head:
  more = cmp le i len
  br more body exit
body:
  store buf i seed         # expect: BufferOverflowWrite
  one = const 1
  i = add i one
  jmp head
exit:
  free buf
  ret
}
)";

constexpr const char* null_ir = R"(# Dereference of a pointer that is always null.
fn deref_null() {
entry:
  p = const null
  v = load p 0             # expect: NullDeref
  ret v
}
)";

constexpr const char* leak_ir = R"(# Buffer allocated, written, never freed nor returned.
fn leaky() {
entry:
  size = const 16
  buf = alloc size         # expect: MemoryLeak
  zero = const 0
  store buf 0 zero
  ret
}
)";

constexpr const char* clean_ir = R"(# Bounded fill and sum over a heap buffer, plus a checked lookup.
fn sum_buffer(n:int) {
entry:
  len = const 8
  buf = alloc len
  i = const 0
  jmp fill_head
fill_head:
  more = cmp lt i len
  br more fill_body sum_init
fill_body:
  store buf i n
  one = const 1
  i = add i one
  jmp fill_head
sum_init:
  total = const 0
  j = const 0
  jmp sum_head
sum_head:
  again = cmp lt j len
  br again sum_body done
sum_body:
  v = load buf j
  total = add total v
  step = const 1
  j = add j step
  jmp sum_head
done:
  free buf
  ret total
}

fn lookup(key:int) {
entry:
  node = call find(key)
  missing = cmp eq node null
  br missing absent present
present:
  v = load node 0
  ret v
absent:
  z = const 0
  ret z
}
)";

std::vector<expected_finding> parse_expectations(const std::string& text) {
    static const std::map<std::string, diagnostic_kind> kinds = {
        {"BufferOverflowWrite", diagnostic_kind::buffer_overflow_write},
        {"BufferOverRead", diagnostic_kind::buffer_over_read},
        {"NullDeref", diagnostic_kind::null_deref},
        {"MemoryLeak", diagnostic_kind::memory_leak},
        {"ShiftOverflow", diagnostic_kind::shift_overflow},
    };
    std::vector<expected_finding> out;
    std::istringstream in(text);
    std::string line;
    int n = 0;
    const std::string marker = "# expect: ";
    while (std::getline(in, line)) {
        ++n;
        const auto pos = line.find(marker);
        if (pos == std::string::npos) continue;
        std::string kind = line.substr(pos + marker.size());
        while (!kind.empty() && std::isspace(static_cast<unsigned char>(kind.back()))) kind.pop_back();
        out.push_back({kinds.at(kind), n});
    }
    return out;
}

corpus_file make(const char* name, const char* text, bool listing) {
    return corpus_file{name, text, listing, parse_expectations(text)};
}

} // namespace

const std::vector<corpus_file>& corpus_files() {
    static const std::vector<corpus_file> files = {
        make("dtoa_vuln.ir", dtoa_vuln, true),       make("dtoa_fixed.ir", dtoa_fixed, true),
        make("codemap_vuln.ir", codemap_vuln, true), make("codemap_fixed.ir", codemap_fixed, true),
        make("oob_read.ir", oob_read, false),        make("oob_write.ir", oob_write, false),
        make("null.ir", null_ir, false),             make("leak.ir", leak_ir, false),
        make("clean.ir", clean_ir, false),
    };
    return files;
}

std::vector<std::string> generate_corpus(const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::vector<std::string> written;
    nlohmann::ordered_json manifest = nlohmann::ordered_json::array();
    for (const auto& f : corpus_files()) {
        std::ofstream out(dir / f.name, std::ios::binary);
        out << f.text;
        if (!out) throw std::runtime_error("cannot write " + (dir / f.name).string());
        written.push_back(f.name);
        nlohmann::ordered_json expected = nlohmann::ordered_json::array();
        for (const auto& e : f.expected) {
            expected.push_back({{"kind", std::string(to_string(e.kind))}, {"line", e.line}});
        }
        manifest.push_back({{"file", f.name}, {"listing_derived", f.listing_derived}, {"expected", expected}});
    }
    std::ofstream out(dir / "manifest.json", std::ios::binary);
    out << manifest.dump(2) << "\n";
    if (!out) throw std::runtime_error("cannot write manifest.json");
    written.push_back("manifest.json");
    return written;
}

} // namespace sealpy::memcheck
