#include "fsqkit/huffman.hpp"

#include "fsqkit/bitio.hpp"
#include "fsqkit/error.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <string>

namespace fsqkit::bitstream {

namespace {

constexpr int max_code_length = 64;
__extension__ typedef unsigned __int128 wide_uint;

}  // namespace

void BitWriter::write(std::uint64_t value, int bits) {
    for (int b = bits - 1; b >= 0; --b) {
        pending_ = static_cast<std::uint8_t>((pending_ << 1) | ((value >> b) & 1u));
        if (++pending_bits_ == 8) {
            out_.push_back(pending_);
            pending_ = 0;
            pending_bits_ = 0;
        }
    }
    written_ += static_cast<std::uint64_t>(bits);
}

void BitWriter::flush() {
    if (pending_bits_ > 0) {
        out_.push_back(static_cast<std::uint8_t>(pending_ << (8 - pending_bits_)));
        pending_ = 0;
        pending_bits_ = 0;
    }
}

int BitReader::read_bit() {
    if (pos_ >= data_.size() * 8) {
        throw Error(ErrorKind::parse_error, "payload truncated", base_ + data_.size());
    }
    const auto byte = data_[static_cast<std::size_t>(pos_ / 8)];
    const int bit = (byte >> (7 - static_cast<int>(pos_ % 8))) & 1;
    ++pos_;
    return bit;
}

std::uint64_t BitReader::read(int bits) {
    if (static_cast<std::uint64_t>(bits) > bits_remaining()) {
        throw Error(ErrorKind::parse_error, "payload truncated", byte_offset());
    }
    std::uint64_t v = 0;
    for (int i = 0; i < bits; ++i) v = (v << 1) | static_cast<std::uint64_t>(read_bit());
    return v;
}

HuffmanTable HuffmanTable::from_lengths(std::span<const std::uint8_t> lengths_by_symbol) {
    HuffmanTable table;
    for (std::size_t s = 0; s < lengths_by_symbol.size(); ++s) {
        const int len = lengths_by_symbol[s];
        if (len == 0) continue;
        if (len > max_code_length) {
            throw Error(ErrorKind::coverage_error, "code length " + std::to_string(len) + " too long");
        }
        table.order_.emplace_back(static_cast<std::uint64_t>(s), len);
    }
    table.finalize();
    return table;
}

void HuffmanTable::finalize() {
    std::sort(order_.begin(), order_.end(), [](const auto &a, const auto &b) {
        return a.second != b.second ? a.second < b.second : a.first < b.first;
    });
    // Kraft check in exact integer arithmetic on a 2^-64 grid.
    wide_uint kraft = 0;
    for (const auto &[symbol, len] : order_) {
        kraft += static_cast<wide_uint>(1) << (max_code_length - len);
    }
    if (kraft > (static_cast<wide_uint>(1) << max_code_length)) {
        throw Error(ErrorKind::coverage_error, "code lengths violate the Kraft inequality");
    }

    codes_.assign(order_.size(), 0);
    first_code_.assign(max_code_length + 1, 0);
    first_index_.assign(max_code_length + 1, 0);
    count_.assign(max_code_length + 1, 0);
    std::uint64_t code = 0;
    int prev_len = order_.empty() ? 0 : order_.front().second;
    for (std::size_t i = 0; i < order_.size(); ++i) {
        const int len = order_[i].second;
        if (i > 0) {
            ++code;
            code <<= (len - prev_len);
        } else {
            code = 0;
        }
        if (count_[static_cast<std::size_t>(len)] == 0) {
            first_code_[static_cast<std::size_t>(len)] = code;
            first_index_[static_cast<std::size_t>(len)] = i;
        }
        ++count_[static_cast<std::size_t>(len)];
        codes_[i] = code;
        prev_len = len;
    }
    by_symbol_.clear();
    by_symbol_.reserve(order_.size());
    for (std::size_t i = 0; i < order_.size(); ++i) by_symbol_.emplace_back(order_[i].first, i);
    std::sort(by_symbol_.begin(), by_symbol_.end());
}

std::ptrdiff_t HuffmanTable::find(std::uint64_t symbol) const {
    auto it = std::lower_bound(by_symbol_.begin(), by_symbol_.end(), symbol,
                               [](const auto &entry, std::uint64_t s) { return entry.first < s; });
    if (it == by_symbol_.end() || it->first != symbol) return -1;
    return static_cast<std::ptrdiff_t>(it->second);
}

int HuffmanTable::length(std::uint64_t symbol) const {
    const auto i = find(symbol);
    return i < 0 ? 0 : order_[static_cast<std::size_t>(i)].second;
}

std::uint64_t HuffmanTable::codeword(std::uint64_t symbol) const {
    const auto i = find(symbol);
    if (i < 0) {
        throw Error(ErrorKind::coverage_error, "symbol " + std::to_string(symbol) + " has no code");
    }
    return codes_[static_cast<std::size_t>(i)];
}

std::vector<std::uint8_t> HuffmanTable::dense_lengths() const {
    std::uint64_t max_symbol = 0;
    for (const auto &[s, len] : order_) max_symbol = std::max(max_symbol, s);
    std::vector<std::uint8_t> lengths(order_.empty() ? 0 : static_cast<std::size_t>(max_symbol) + 1, 0);
    for (const auto &[s, len] : order_) lengths[static_cast<std::size_t>(s)] = static_cast<std::uint8_t>(len);
    return lengths;
}

double HuffmanTable::kraft_sum() const {
    double sum = 0.0;
    for (const auto &[s, len] : order_) sum += std::ldexp(1.0, -len);
    return sum;
}

void HuffmanTable::encode(std::uint64_t symbol, BitWriter &out) const {
    const auto i = find(symbol);
    if (i < 0) {
        throw Error(ErrorKind::coverage_error, "symbol " + std::to_string(symbol) + " has no code");
    }
    out.write(codes_[static_cast<std::size_t>(i)], order_[static_cast<std::size_t>(i)].second);
}

std::uint64_t HuffmanTable::decode(BitReader &in) const {
    const std::size_t start = in.byte_offset();
    std::uint64_t code = 0;
    const int longest = order_.empty() ? 0 : order_.back().second;
    for (int len = 1; len <= longest; ++len) {
        code = (code << 1) | static_cast<std::uint64_t>(in.read_bit());
        const auto n = count_[static_cast<std::size_t>(len)];
        if (n == 0) continue;
        const auto first = first_code_[static_cast<std::size_t>(len)];
        if (code >= first && code - first < n) {
            return order_[first_index_[static_cast<std::size_t>(len)] + static_cast<std::size_t>(code - first)].first;
        }
    }
    throw Error(ErrorKind::parse_error, "invalid Huffman codeword", start);
}

HuffmanTable huffman_build(const CodebookHistogram &h) {
    if (h.total() == 0) {
        throw Error(ErrorKind::no_data, "cannot build a Huffman code from an empty histogram");
    }
    HuffmanTable table;
    const auto &counts = h.counts();
    if (counts.size() == 1) {
        table.order_.emplace_back(counts.begin()->first, 1);
        table.finalize();
        return table;
    }

    struct Node {
        std::uint64_t weight;
        std::size_t id;
        std::ptrdiff_t left = -1;
        std::ptrdiff_t right = -1;
        std::uint64_t symbol = 0;
    };
    std::vector<Node> nodes;
    nodes.reserve(2 * counts.size());
    for (const auto &[symbol, count] : counts) {
        nodes.push_back({count, nodes.size(), -1, -1, symbol});
    }
    // Ties broken by creation order, which makes the tree deterministic.
    auto heavier = [&](std::size_t a, std::size_t b) {
        return nodes[a].weight != nodes[b].weight ? nodes[a].weight > nodes[b].weight
                                                  : nodes[a].id > nodes[b].id;
    };
    std::priority_queue<std::size_t, std::vector<std::size_t>, decltype(heavier)> heap(heavier);
    for (std::size_t i = 0; i < nodes.size(); ++i) heap.push(i);
    while (heap.size() > 1) {
        const auto a = heap.top();
        heap.pop();
        const auto b = heap.top();
        heap.pop();
        nodes.push_back({nodes[a].weight + nodes[b].weight, nodes.size(),
                         static_cast<std::ptrdiff_t>(a), static_cast<std::ptrdiff_t>(b), 0});
        heap.push(nodes.size() - 1);
    }

    std::vector<std::pair<std::size_t, int>> stack{{heap.top(), 0}};
    while (!stack.empty()) {
        auto [idx, depth] = stack.back();
        stack.pop_back();
        const Node &node = nodes[idx];
        if (node.left < 0) {
            if (depth > max_code_length) {
                throw Error(ErrorKind::capacity_error, "Huffman code deeper than 64 bits");
            }
            table.order_.emplace_back(node.symbol, depth);
            continue;
        }
        stack.emplace_back(static_cast<std::size_t>(node.left), depth + 1);
        stack.emplace_back(static_cast<std::size_t>(node.right), depth + 1);
    }
    table.finalize();
    return table;
}

double average_code_length(const CodebookHistogram &h, const HuffmanTable &table) {
    if (h.total() == 0) {
        throw Error(ErrorKind::no_data, "histogram is empty");
    }
    double avg = 0.0;
    for (const auto &[symbol, count] : h.counts()) {
        const int len = table.length(symbol);
        if (len == 0) {
            throw Error(ErrorKind::coverage_error, "symbol " + std::to_string(symbol) + " has no code");
        }
        avg += static_cast<double>(count) / static_cast<double>(h.total()) * len;
    }
    return avg;
}

double huffman_bitrate(const CodebookHistogram &h, const HuffmanTable &table,
                       const Rational &tokens_per_second) {
    return tokens_per_second.to_double() * average_code_length(h, table);
}

}  // namespace fsqkit::bitstream
