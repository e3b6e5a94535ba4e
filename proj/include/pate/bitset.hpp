#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "pate/errors.hpp"

namespace pate {

/// Fixed-length bitset packed into 64-bit words. Bits past size() are kept
/// zero so popcounts and word-wise comparisons stay exact. Serialized form is
/// the bit length followed by little-endian 64-bit words.
class Bitset {
public:
    Bitset() = default;

    explicit Bitset(std::size_t nbits, bool value = false)
        : nbits_(nbits), words_((nbits + 63) / 64, value ? ~0ull : 0ull) {
        clear_tail();
    }

    std::size_t size() const { return nbits_; }

    bool test(std::size_t i) const { return (words_[i >> 6] >> (i & 63)) & 1ull; }

    void set(std::size_t i, bool v = true) {
        const std::uint64_t bit = 1ull << (i & 63);
        if (v)
            words_[i >> 6] |= bit;
        else
            words_[i >> 6] &= ~bit;
    }

    void reset(std::size_t i) { set(i, false); }

    /// Number of 1-bits.
    std::size_t count() const {
        std::size_t c = 0;
        for (std::uint64_t w : words_) c += static_cast<std::size_t>(std::popcount(w));
        return c;
    }

    /// Flips every bit (within size()).
    Bitset flipped() const {
        Bitset out = *this;
        for (auto& w : out.words_) w = ~w;
        out.clear_tail();
        return out;
    }

    Bitset operator&(const Bitset& other) const {
        require_same_size(other);
        Bitset out = *this;
        for (std::size_t i = 0; i < words_.size(); ++i) out.words_[i] &= other.words_[i];
        return out;
    }

    Bitset operator|(const Bitset& other) const {
        require_same_size(other);
        Bitset out = *this;
        for (std::size_t i = 0; i < words_.size(); ++i) out.words_[i] |= other.words_[i];
        return out;
    }

    bool operator==(const Bitset& other) const {
        return nbits_ == other.nbits_ && words_ == other.words_;
    }
    bool operator!=(const Bitset& other) const { return !(*this == other); }

    bool none() const {
        for (std::uint64_t w : words_)
            if (w) return false;
        return true;
    }

    bool all() const { return count() == nbits_; }

    /// Bits set in exactly one of the two sets.
    std::size_t hamming_distance(const Bitset& other) const {
        require_same_size(other);
        std::size_t d = 0;
        for (std::size_t i = 0; i < words_.size(); ++i)
            d += static_cast<std::size_t>(std::popcount(words_[i] ^ other.words_[i]));
        return d;
    }

    const std::vector<std::uint64_t>& words() const { return words_; }

    void write(std::ostream& out) const {
        write_u64(out, nbits_);
        for (std::uint64_t w : words_) write_u64(out, w);
    }

    static Bitset read(std::istream& in) {
        Bitset b;
        b.nbits_ = read_u64(in);
        b.words_.resize((b.nbits_ + 63) / 64);
        for (auto& w : b.words_) w = read_u64(in);
        Bitset check = b;
        check.clear_tail();
        if (check.words_ != b.words_) throw io_error("bitset: nonzero bits past stated length");
        return b;
    }

    static void write_u64(std::ostream& out, std::uint64_t v) {
        unsigned char buf[8];
        for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
        out.write(reinterpret_cast<const char*>(buf), 8);
        if (!out) throw io_error("bitset: write failed");
    }

    static std::uint64_t read_u64(std::istream& in) {
        unsigned char buf[8];
        in.read(reinterpret_cast<char*>(buf), 8);
        if (!in) throw io_error("bitset: truncated input");
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
        return v;
    }

private:
    void clear_tail() {
        const std::size_t tail = nbits_ & 63;
        if (tail != 0 && !words_.empty()) words_.back() &= (1ull << tail) - 1ull;
    }

    void require_same_size(const Bitset& other) const {
        if (nbits_ != other.nbits_)
            throw std::invalid_argument("bitset: length mismatch (" + std::to_string(nbits_) +
                                        " vs " + std::to_string(other.nbits_) + ")");
    }

    std::size_t nbits_ = 0;
    std::vector<std::uint64_t> words_;
};

}  // namespace pate
