#include "sealpy/interp/value.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <functional>
#include <limits>

#include "sealpy/interp/errors.hpp"

namespace sealpy::interp {

object::object(heap& owner, std::size_t cells) : heap_(&owner) {
    owner.charge(cells);
    cells_ = cells;
    owner.link(this);
}

object::~object() {
    heap_->credit(cells_);
    heap_->unlink(this);
}

void object::grow(std::size_t n) {
    heap_->charge(n);
    cells_ += n;
}

void intrusive_ptr_add_ref(object* o) noexcept { ++o->refs_; }

void intrusive_ptr_release(object* o) noexcept {
    if (--o->refs_ == 0) o->heap_->dispose(o);
}

heap::heap(std::size_t budget_cells) : budget_(budget_cells) {}

heap::~heap() { teardown(); }

void heap::charge(std::size_t cells) {
    if (cells > budget_ || live_ > budget_ - cells) throw memory_budget_exceeded(cells, live_, budget_);
    live_ += cells;
    if (live_ > peak_) peak_ = live_;
    ++allocations_;
}

void heap::credit(std::size_t cells) noexcept { live_ -= cells; }

void heap::link(object* o) noexcept {
    o->next_ = head_;
    if (head_) head_->prev_ = o;
    head_ = o;
    ++objects_;
}

void heap::unlink(object* o) noexcept {
    if (o->prev_) o->prev_->next_ = o->next_;
    else head_ = o->next_;
    if (o->next_) o->next_->prev_ = o->prev_;
    --objects_;
}

void heap::dispose(object* o) noexcept {
    pending_.push_back(o);
    if (draining_) return;
    draining_ = true;
    while (!pending_.empty()) {
        object* next = pending_.back();
        pending_.pop_back();
        delete next;
    }
    draining_ = false;
}

void heap::teardown() {
    std::vector<boost::intrusive_ptr<object>> all;
    all.reserve(objects_);
    for (object* o = head_; o; o = o->next_) all.emplace_back(o);
    for (auto& o : all) o->drop_references();
    all.clear();
}

str_obj::str_obj(heap& h, std::string s) : object(h, s.size()), text(std::move(s)) {}

list_obj::list_obj(heap& h, std::vector<value> xs) : object(h, xs.size()), items(std::move(xs)) {}

void list_obj::append(value v) {
    grow(1);
    items.push_back(std::move(v));
}

std::size_t map_key_hash::operator()(const map_key& k) const noexcept {
    const std::size_t h = k.t == map_key::tag::text ? std::hash<std::string>{}(k.text)
                                                    : std::hash<std::int64_t>{}(k.bits);
    return h * 31 + static_cast<std::size_t>(k.t);
}

map_key make_key(const value& v) {
    map_key k;
    if (std::holds_alternative<none_t>(v)) {
        k.t = map_key::tag::none;
    } else if (auto b = std::get_if<bool>(&v)) {
        k.t = map_key::tag::boolean;
        k.bits = *b;
    } else if (auto i = std::get_if<std::int64_t>(&v)) {
        k.t = map_key::tag::integer;
        k.bits = *i;
    } else if (auto d = std::get_if<double>(&v)) {
        if (std::isnan(*d)) throw guest_error(guest_error_kind::type_error, "NaN is not a valid map key");
        k.t = map_key::tag::floating;
        k.bits = std::bit_cast<std::int64_t>(*d == 0.0 ? 0.0 : *d);
    } else if (auto s = std::get_if<str_ref>(&v)) {
        k.t = map_key::tag::text;
        k.text = (*s)->text;
    } else {
        throw guest_error(guest_error_kind::type_error, "unhashable type: '" + std::string(type_name(v)) + "'");
    }
    return k;
}

map_obj::map_obj(heap& h) : object(h, 0) {}

const value* map_obj::find(const value& key) const {
    auto it = index_.find(make_key(key));
    if (it == index_.end()) return nullptr;
    return &entries_[it->second].second;
}

void map_obj::set(const value& key, value v) {
    map_key k = make_key(key);
    auto it = index_.find(k);
    if (it != index_.end()) {
        entries_[it->second].second = std::move(v);
        return;
    }
    grow(1);
    index_.emplace(std::move(k), entries_.size());
    entries_.emplace_back(key, std::move(v));
}

void map_obj::drop_references() {
    entries_.clear();
    index_.clear();
}

scope::scope(heap& h, scope_ref parent) : object(h, 0), parent_(std::move(parent)) {}

value* scope::find_local(int sym) {
    for (std::size_t i = 0; i < syms_.size(); ++i) {
        if (syms_[i] == sym) return &vals_[i];
    }
    return nullptr;
}

value* scope::lookup(int sym) {
    for (scope* s = this; s; s = s->parent_.get()) {
        if (value* v = s->find_local(sym)) return v;
    }
    return nullptr;
}

void scope::set(int sym, value v) {
    if (value* slot = find_local(sym)) {
        *slot = std::move(v);
        return;
    }
    syms_.push_back(sym);
    vals_.push_back(std::move(v));
}

void scope::drop_references() {
    vals_.clear();
    syms_.clear();
    parent_.reset();
}

func_obj::func_obj(heap& h, const def_stmt* d, program_unit* u, scope_ref c, std::string n)
    : object(h, 1), def(d), unit(u), closure(std::move(c)), name(std::move(n)) {}

module_obj::module_obj(heap& h, std::string n, program_unit* u, scope_ref g)
    : object(h, 1), name(std::move(n)), unit(u), globals(std::move(g)) {}

range_obj::range_obj(heap& h, std::int64_t a, std::int64_t b, std::int64_t s)
    : object(h, 1), start(a), stop(b), step(s) {}

std::int64_t range_obj::length() const noexcept {
    // 128-bit intermediates: stop - start may not fit in 64 bits.
    __int128 span = static_cast<__int128>(stop) - start;
    __int128 stride = step;
    if (stride < 0) {
        span = -span;
        stride = -stride;
    }
    if (span <= 0) return 0;
    return static_cast<std::int64_t>((span + stride - 1) / stride);
}

method_obj::method_obj(heap& h, list_ref s) : object(h, 1), self(std::move(s)) {}

std::string_view type_name(const value& v) {
    switch (v.index()) {
    case 0: return "NoneType";
    case 1: return "bool";
    case 2: return "int";
    case 3: return "float";
    case 4: return "str";
    case 5: return "list";
    case 6: return "dict";
    case 7: return "function";
    case 8: return "module";
    case 9: return "range";
    case 10: return "builtin_function";
    case 11: return "method";
    }
    return "?";
}

bool truthy(const value& v) {
    switch (v.index()) {
    case 0: return false;
    case 1: return std::get<bool>(v);
    case 2: return std::get<std::int64_t>(v) != 0;
    case 3: return std::get<double>(v) != 0.0;
    case 4: return !std::get<str_ref>(v)->text.empty();
    case 5: return !std::get<list_ref>(v)->items.empty();
    case 6: return std::get<map_ref>(v)->size() != 0;
    case 9: return std::get<range_ref>(v)->length() != 0;
    default: return true;
    }
}

std::string format_float(double d) {
    if (std::isnan(d)) return "nan";
    if (std::isinf(d)) return d > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, d, std::chars_format::scientific);
    std::string_view sci(buf, static_cast<std::size_t>(res.ptr - buf));
    std::string out;
    if (sci.front() == '-') {
        out += '-';
        sci.remove_prefix(1);
    }
    const auto epos = sci.find('e');
    int exp10 = 0;
    std::from_chars(sci.data() + epos + 1 + (sci[epos + 1] == '+'), sci.data() + sci.size(), exp10);
    std::string digits;
    for (char c : sci.substr(0, epos)) {
        if (c != '.') digits += c;
    }
    if (exp10 >= -4 && exp10 < 16) {
        if (exp10 >= 0) {
            const auto int_len = static_cast<std::size_t>(exp10) + 1;
            if (digits.size() <= int_len) {
                out += digits + std::string(int_len - digits.size(), '0') + ".0";
            } else {
                out += digits.substr(0, int_len) + "." + digits.substr(int_len);
            }
        } else {
            out += "0." + std::string(static_cast<std::size_t>(-exp10 - 1), '0') + digits;
        }
        return out;
    }
    out += digits.substr(0, 1);
    if (digits.size() > 1) out += "." + digits.substr(1);
    out += exp10 < 0 ? "e-" : "e+";
    const int mag = exp10 < 0 ? -exp10 : exp10;
    if (mag < 10) out += '0';
    out += std::to_string(mag);
    return out;
}

namespace {

std::string quote(const std::string& s) {
    const bool has_single = s.find('\'') != std::string::npos;
    const bool has_double = s.find('"') != std::string::npos;
    const char q = has_single && !has_double ? '"' : '\'';
    std::string out(1, q);
    static const char* hex = "0123456789abcdef";
    for (unsigned char c : s) {
        if (c == static_cast<unsigned char>(q) || c == '\\') {
            out += '\\';
            out += static_cast<char>(c);
        } else if (c == '\n') {
            out += "\\n";
        } else if (c == '\r') {
            out += "\\r";
        } else if (c == '\t') {
            out += "\\t";
        } else if (c < 0x20 || c == 0x7f) {
            out += "\\x";
            out += hex[c >> 4];
            out += hex[c & 15];
        } else {
            out += static_cast<char>(c);
        }
    }
    out += q;
    return out;
}

class printer {
  public:
    explicit printer(std::size_t limit) : limit_(limit) {}

    void repr(const value& v, std::string& out) {
        if (out.size() > limit_) throw memory_budget_exceeded(out.size(), 0, limit_);
        switch (v.index()) {
        case 0: out += "None"; return;
        case 1: out += std::get<bool>(v) ? "True" : "False"; return;
        case 2: out += std::to_string(std::get<std::int64_t>(v)); return;
        case 3: out += format_float(std::get<double>(v)); return;
        case 4: out += quote(std::get<str_ref>(v)->text); return;
        case 5: {
            const auto& l = std::get<list_ref>(v);
            if (!enter(l.get())) {
                out += "[...]";
                return;
            }
            out += '[';
            for (std::size_t i = 0; i < l->items.size(); ++i) {
                if (i) out += ", ";
                repr(l->items[i], out);
            }
            out += ']';
            leave();
            return;
        }
        case 6: {
            const auto& m = std::get<map_ref>(v);
            if (!enter(m.get())) {
                out += "{...}";
                return;
            }
            out += '{';
            bool first = true;
            for (const auto& [k, val] : m->entries()) {
                if (!first) out += ", ";
                first = false;
                repr(k, out);
                out += ": ";
                repr(val, out);
            }
            out += '}';
            leave();
            return;
        }
        case 7: out += "<function " + std::get<func_ref>(v)->name + ">"; return;
        case 8: out += "<module '" + std::get<module_ref>(v)->name + "'>"; return;
        case 9: {
            const auto& r = std::get<range_ref>(v);
            out += "range(" + std::to_string(r->start) + ", " + std::to_string(r->stop);
            if (r->step != 1) out += ", " + std::to_string(r->step);
            out += ')';
            return;
        }
        case 10: out += "<built-in function>"; return;
        case 11: out += "<built-in method append of list object>"; return;
        }
    }

  private:
    bool enter(const object* o) {
        for (const object* p : active_) {
            if (p == o) return false;
        }
        if (active_.size() >= static_cast<std::size_t>(max_nesting)) {
            throw guest_error(guest_error_kind::recursion_error, "maximum nesting depth exceeded in repr");
        }
        active_.push_back(o);
        return true;
    }
    void leave() { active_.pop_back(); }

    std::size_t limit_;
    std::vector<const object*> active_;
};

bool is_number(const value& v) { return v.index() >= 1 && v.index() <= 3; }

long double as_long_double(const value& v) {
    switch (v.index()) {
    case 1: return std::get<bool>(v) ? 1 : 0;
    case 2: return static_cast<long double>(std::get<std::int64_t>(v));
    default: return std::get<double>(v);
    }
}

// long double holds every int64 and double exactly on the supported targets.
static_assert(std::numeric_limits<long double>::digits >= 64);

bool equals_at(const value& a, const value& b, int depth) {
    if (depth > max_nesting) throw guest_error(guest_error_kind::recursion_error, "maximum nesting depth exceeded in comparison");
    if (is_number(a) && is_number(b)) {
        if (a.index() == 2 && b.index() == 2) return std::get<std::int64_t>(a) == std::get<std::int64_t>(b);
        return as_long_double(a) == as_long_double(b);
    }
    if (a.index() != b.index()) return false;
    switch (a.index()) {
    case 0: return true;
    case 4: return std::get<str_ref>(a)->text == std::get<str_ref>(b)->text;
    case 5: {
        const auto& x = std::get<list_ref>(a)->items;
        const auto& y = std::get<list_ref>(b)->items;
        if (&x == &y) return true;
        if (x.size() != y.size()) return false;
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (!equals_at(x[i], y[i], depth + 1)) return false;
        }
        return true;
    }
    case 6: {
        const auto& x = *std::get<map_ref>(a);
        const auto& y = *std::get<map_ref>(b);
        if (&x == &y) return true;
        if (x.size() != y.size()) return false;
        for (const auto& [k, v] : x.entries()) {
            const value* other = y.find(k);
            if (!other || !equals_at(v, *other, depth + 1)) return false;
        }
        return true;
    }
    case 7: return std::get<func_ref>(a) == std::get<func_ref>(b);
    case 8: return std::get<module_ref>(a) == std::get<module_ref>(b);
    case 9: {
        const auto& x = *std::get<range_ref>(a);
        const auto& y = *std::get<range_ref>(b);
        const auto n = x.length();
        if (n != y.length()) return false;
        if (n == 0) return true;
        return x.start == y.start && (n == 1 || x.step == y.step);
    }
    case 10: return std::get<builtin_ref>(a) == std::get<builtin_ref>(b);
    case 11: return std::get<method_ref>(a) == std::get<method_ref>(b);
    }
    return false;
}

bool less_at(const value& a, const value& b, int depth) {
    if (depth > max_nesting) throw guest_error(guest_error_kind::recursion_error, "maximum nesting depth exceeded in comparison");
    if (is_number(a) && is_number(b)) {
        if (a.index() == 2 && b.index() == 2) return std::get<std::int64_t>(a) < std::get<std::int64_t>(b);
        return as_long_double(a) < as_long_double(b);
    }
    if (a.index() == 4 && b.index() == 4) return std::get<str_ref>(a)->text < std::get<str_ref>(b)->text;
    if (a.index() == 5 && b.index() == 5) {
        const auto& x = std::get<list_ref>(a)->items;
        const auto& y = std::get<list_ref>(b)->items;
        for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
            if (!equals_at(x[i], y[i], depth + 1)) return less_at(x[i], y[i], depth + 1);
        }
        return x.size() < y.size();
    }
    throw guest_error(guest_error_kind::type_error, "'<' not supported between instances of '" +
                                                        std::string(type_name(a)) + "' and '" +
                                                        std::string(type_name(b)) + "'");
}

} // namespace

std::string to_repr(const value& v, std::size_t max_bytes) {
    std::string out;
    printer(max_bytes).repr(v, out);
    if (out.size() > max_bytes) throw memory_budget_exceeded(out.size(), 0, max_bytes);
    return out;
}

std::string to_str(const value& v, std::size_t max_bytes) {
    if (auto s = std::get_if<str_ref>(&v)) {
        if ((*s)->text.size() > max_bytes) throw memory_budget_exceeded((*s)->text.size(), 0, max_bytes);
        return (*s)->text;
    }
    return to_repr(v, max_bytes);
}

bool equals(const value& a, const value& b) { return equals_at(a, b, 0); }
bool less_than(const value& a, const value& b) { return less_at(a, b, 0); }

} // namespace sealpy::interp
