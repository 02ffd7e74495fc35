#ifndef MPSTBUS_REFCOUNT_HPP
#define MPSTBUS_REFCOUNT_HPP

#include <atomic>
#include <cstddef>
#include <utility>

namespace mpstbus {

/// Base for intrusively reference counted objects. New objects start at
/// count zero; the first counted_ptr adopting them brings the count to one.
class ref_counted {
public:
    ref_counted(const ref_counted&) = delete;
    ref_counted& operator=(const ref_counted&) = delete;

    unsigned refcount() const { return count_.load(std::memory_order_acquire); }

protected:
    ref_counted() = default;
    virtual ~ref_counted() = default;

    /// Retains only if the count is still nonzero; a zero count means the
    /// object is already on its way to destruction and must not be revived.
    bool try_retain_() const {
        unsigned cur = count_.load(std::memory_order_acquire);
        while (cur != 0)
            if (count_.compare_exchange_weak(cur, cur + 1, std::memory_order_acq_rel)) return true;
        return false;
    }

private:
    void retain_() const { count_.fetch_add(1, std::memory_order_acq_rel); }
    bool release_() const { return count_.fetch_sub(1, std::memory_order_acq_rel) == 1; }

    mutable std::atomic<unsigned> count_{0};

    template <class T> friend class counted_ptr;
};

/// Intrusive smart pointer over ref_counted types. Copy retains, destruction
/// releases; the object is deleted when the count reaches zero.
template <class T>
class counted_ptr {
public:
    counted_ptr() = default;
    counted_ptr(std::nullptr_t) {}

    /// Adopts a freshly allocated object (or retains an existing one).
    explicit counted_ptr(T* p) : p_(p) {
        if (p_) p_->retain_();
    }

    counted_ptr(const counted_ptr& other) : p_(other.p_) {
        if (p_) p_->retain_();
    }

    counted_ptr(counted_ptr&& other) noexcept : p_(other.p_) { other.p_ = nullptr; }

    counted_ptr& operator=(const counted_ptr& other) {
        counted_ptr tmp(other);
        swap(tmp);
        return *this;
    }

    counted_ptr& operator=(counted_ptr&& other) noexcept {
        counted_ptr tmp(std::move(other));
        swap(tmp);
        return *this;
    }

    ~counted_ptr() { reset(); }

    void reset() {
        if (p_ && p_->release_()) delete p_;
        p_ = nullptr;
    }

    void swap(counted_ptr& other) noexcept { std::swap(p_, other.p_); }

    T* get() const { return p_; }
    T& operator*() const { return *p_; }
    T* operator->() const { return p_; }
    explicit operator bool() const { return p_ != nullptr; }

    friend bool operator==(const counted_ptr& a, const counted_ptr& b) { return a.p_ == b.p_; }
    friend bool operator!=(const counted_ptr& a, const counted_ptr& b) { return a.p_ != b.p_; }

    template <class... Args>
    static counted_ptr make(Args&&... args) {
        return counted_ptr(new T(std::forward<Args>(args)...));
    }

    /// Takes ownership of a count increment the caller already performed
    /// (via try_retain_); returns an empty pointer when that failed.
    static counted_ptr adopt_retained(T* p) {
        counted_ptr out;
        out.p_ = p;
        return out;
    }

private:
    T* p_ = nullptr;
};

} // namespace mpstbus

#endif // MPSTBUS_REFCOUNT_HPP
