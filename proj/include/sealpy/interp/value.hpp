#pragma once

#include <boost/smart_ptr/intrusive_ptr.hpp>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

namespace sealpy::interp {

class heap;
struct def_stmt;
struct program_unit;

// Base of every guest heap object. Reference counts are not atomic: an
// object never leaves the interpreter instance that created it.
class object {
  public:
    object(heap& owner, std::size_t cells);
    object(const object&) = delete;
    object& operator=(const object&) = delete;
    virtual ~object();

    heap& owner() const noexcept { return *heap_; }
    std::size_t cells() const noexcept { return cells_; }

    // Clears outgoing references. Only called while tearing a heap down.
    virtual void drop_references() {}

  protected:
    // Charges `n` more cells to the heap and to this object.
    void grow(std::size_t n);

  private:
    friend class heap;
    friend void intrusive_ptr_add_ref(object* o) noexcept;
    friend void intrusive_ptr_release(object* o) noexcept;

    heap* heap_;
    std::size_t cells_ = 0;
    std::uint32_t refs_ = 0;
    object* prev_ = nullptr;
    object* next_ = nullptr;
};

void intrusive_ptr_add_ref(object* o) noexcept;
void intrusive_ptr_release(object* o) noexcept;

class str_obj;
class list_obj;
class map_obj;
class func_obj;
class module_obj;
class range_obj;
class method_obj;
class scope;

using str_ref = boost::intrusive_ptr<str_obj>;
using list_ref = boost::intrusive_ptr<list_obj>;
using map_ref = boost::intrusive_ptr<map_obj>;
using func_ref = boost::intrusive_ptr<func_obj>;
using module_ref = boost::intrusive_ptr<module_obj>;
using range_ref = boost::intrusive_ptr<range_obj>;
using method_ref = boost::intrusive_ptr<method_obj>;
using scope_ref = boost::intrusive_ptr<scope>;

struct none_t {
    friend bool operator==(none_t, none_t) noexcept { return true; }
};

struct builtin_ref {
    int id = 0;
    friend bool operator==(builtin_ref, builtin_ref) noexcept = default;
};

using value = std::variant<none_t, bool, std::int64_t, double, str_ref, list_ref, map_ref, func_ref, module_ref,
                           range_ref, builtin_ref, method_ref>;

// Budgeted cell accounting plus the registry of live objects. Cells are
// credited back when an object is destroyed.
class heap {
  public:
    explicit heap(std::size_t budget_cells);
    heap(const heap&) = delete;
    heap& operator=(const heap&) = delete;
    ~heap();

    // Throws memory_budget_exceeded, leaving the counters unchanged, when
    // live() + cells would exceed the budget.
    void charge(std::size_t cells);

    std::size_t budget() const noexcept { return budget_; }
    std::size_t live() const noexcept { return live_; }
    std::size_t peak() const noexcept { return peak_; }
    std::uint64_t allocations() const noexcept { return allocations_; }
    std::size_t object_count() const noexcept { return objects_; }

    // Breaks reference cycles so every object the host no longer holds is freed.
    void teardown();

    template <class T, class... Args>
    boost::intrusive_ptr<T> make(Args&&... args) {
        return boost::intrusive_ptr<T>(new T(*this, std::forward<Args>(args)...));
    }

  private:
    friend class object;
    friend void intrusive_ptr_release(object* o) noexcept;

    void credit(std::size_t cells) noexcept;
    void link(object* o) noexcept;
    void unlink(object* o) noexcept;
    // Destroys iteratively, so long ownership chains cannot exhaust the stack.
    void dispose(object* o) noexcept;

    std::size_t budget_;
    std::size_t live_ = 0;
    std::size_t peak_ = 0;
    std::uint64_t allocations_ = 0;
    std::size_t objects_ = 0;
    object* head_ = nullptr;
    std::vector<object*> pending_;
    bool draining_ = false;
};

class str_obj final : public object {
  public:
    // One cell per byte.
    str_obj(heap& h, std::string s);
    const std::string text;
};

class list_obj final : public object {
  public:
    // One cell per element.
    list_obj(heap& h, std::vector<value> items);
    void append(value v);
    void drop_references() override { items.clear(); }

    std::vector<value> items;
};

// Hashable key identity: the type tag is part of the key, floats compare by
// bit pattern with -0.0 folded into +0.0.
struct map_key {
    enum class tag : std::uint8_t { none, boolean, integer, floating, text } t = tag::none;
    std::int64_t bits = 0;
    std::string text;

    friend bool operator==(const map_key&, const map_key&) = default;
};

struct map_key_hash {
    std::size_t operator()(const map_key& k) const noexcept;
};

// Throws guest TypeError for unhashable values and NaN.
map_key make_key(const value& v);

class map_obj final : public object {
  public:
    explicit map_obj(heap& h);

    const value* find(const value& key) const;
    // One cell per new entry.
    void set(const value& key, value v);
    std::size_t size() const noexcept { return entries_.size(); }
    // Entries in insertion order.
    const std::vector<std::pair<value, value>>& entries() const noexcept { return entries_; }
    void drop_references() override;

  private:
    std::vector<std::pair<value, value>> entries_;
    std::unordered_map<map_key, std::size_t, map_key_hash> index_;
};

class scope final : public object {
  public:
    scope(heap& h, scope_ref parent);

    // Innermost-first lookup through the parent chain.
    value* lookup(int sym);
    value* find_local(int sym);
    void set(int sym, value v);
    const scope_ref& parent() const noexcept { return parent_; }
    void drop_references() override;

  private:
    std::vector<int> syms_;
    std::vector<value> vals_;
    scope_ref parent_;
};

class func_obj final : public object {
  public:
    func_obj(heap& h, const def_stmt* def, program_unit* unit, scope_ref closure, std::string name);
    void drop_references() override { closure.reset(); }

    const def_stmt* def;
    program_unit* unit;
    scope_ref closure;
    const std::string name;
};

class module_obj final : public object {
  public:
    module_obj(heap& h, std::string name, program_unit* unit, scope_ref globals);
    void drop_references() override { globals.reset(); }

    const std::string name;
    program_unit* unit;
    scope_ref globals;
};

class range_obj final : public object {
  public:
    range_obj(heap& h, std::int64_t start, std::int64_t stop, std::int64_t step);
    std::int64_t length() const noexcept;
    std::int64_t at(std::int64_t i) const noexcept { return start + i * step; }

    const std::int64_t start, stop, step;
};

// A list's bound `append`.
class method_obj final : public object {
  public:
    method_obj(heap& h, list_ref self);
    void drop_references() override { self.reset(); }

    list_ref self;
};

std::string_view type_name(const value& v);
bool truthy(const value& v);

// Python `str()` and `repr()`. Cyclic containers print as [...] / {...};
// nesting deeper than max_nesting raises RecursionError. Text longer than
// max_bytes raises memory_budget_exceeded before it is fully built.
std::string to_str(const value& v, std::size_t max_bytes = SIZE_MAX);
std::string to_repr(const value& v, std::size_t max_bytes = SIZE_MAX);
// Shortest round-trip digits, fixed notation for decimal exponents in [-4, 16).
std::string format_float(double d);

// Python `==`: numeric across int/float/bool, element-wise for containers.
bool equals(const value& a, const value& b);
// Python `<`; raises TypeError for unordered pairs.
bool less_than(const value& a, const value& b);

inline constexpr int max_nesting = 1000;

} // namespace sealpy::interp
