#include "daniel/ising.hpp"

namespace daniel {

namespace {

template <typename Derived>
void check_spins(const Eigen::DenseBase<Derived>& s, const char* who) {
    for (Index i = 0; i < s.rows(); ++i)
        for (Index j = 0; j < s.cols(); ++j)
            if (s(i, j) != 1 && s(i, j) != -1)
                throw ContractError(std::string(who) + ": entries must be -1 or +1");
}

} // namespace

BinarySample::BinarySample(SpinVector values) : values_(std::move(values)) {
    check_spins(values_, "BinarySample");
}

BinarySample::BinarySample(std::initializer_list<int> values) : values_(static_cast<Index>(values.size())) {
    Index j = 0;
    for (int v : values)
        values_(j++) = static_cast<std::int8_t>(v);
    check_spins(values_, "BinarySample");
}

BinarySample BinarySample::flipped(Index j) const {
    require(j >= 0 && j < size(), "BinarySample::flipped: index out of range");
    BinarySample out = *this;
    out.values_(j) = static_cast<std::int8_t>(-out.values_(j));
    return out;
}

BinarySample BinarySample::with(Index j, int value) const {
    require(j >= 0 && j < size(), "BinarySample::with: index out of range");
    require(value == 1 || value == -1, "BinarySample::with: value must be -1 or +1");
    BinarySample out = *this;
    out.values_(j) = static_cast<std::int8_t>(value);
    return out;
}

BinaryDataset::BinaryDataset(SpinMatrix spins) : spins_(std::move(spins)) {
    require(spins_.rows() >= 1, "BinaryDataset: need at least one sample");
    require(spins_.cols() >= 1, "BinaryDataset: need at least one feature");
    check_spins(spins_, "BinaryDataset");
}

BinarySample BinaryDataset::sample(Index l) const {
    require(l >= 0 && l < n(), "BinaryDataset::sample: index out of range");
    return BinarySample(SpinVector(spins_.row(l).transpose()));
}

BinaryDataset BinaryDataset::slice(Index first, Index count) const {
    require(first >= 0 && count >= 1 && first + count <= n(), "BinaryDataset::slice: range out of bounds");
    BinaryDataset out;
    out.spins_ = spins_.middleRows(first, count);
    return out;
}

BinaryDataset BinaryDataset::concat(const BinaryDataset& a, const BinaryDataset& b) {
    require(a.p() == b.p(), "BinaryDataset::concat: dimension mismatch");
    SpinMatrix s(a.n() + b.n(), a.p());
    s.topRows(a.n()) = a.spins_;
    s.bottomRows(b.n()) = b.spins_;
    BinaryDataset out;
    out.spins_ = std::move(s);
    return out;
}

} // namespace daniel
