#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "mvm/schema.hpp"

namespace mvm {

/// Ordered collection of instances sharing one schema.
class Dataset {
public:
    explicit Dataset(ViewSchema schema) : schema_(std::move(schema)) {}

    [[nodiscard]] const ViewSchema& schema() const noexcept { return schema_; }
    [[nodiscard]] const std::vector<MultiViewInstance>& instances() const noexcept {
        return instances_;
    }
    [[nodiscard]] std::size_t size() const noexcept { return instances_.size(); }
    [[nodiscard]] bool empty() const noexcept { return instances_.empty(); }
    [[nodiscard]] const MultiViewInstance& operator[](std::size_t i) const { return instances_[i]; }

    void push_back(MultiViewInstance x) {
        check_conforms(schema_, x);
        instances_.push_back(std::move(x));
    }

    [[nodiscard]] std::vector<double> labels() const {
        std::vector<double> y;
        y.reserve(instances_.size());
        for (const auto& x : instances_) {
            y.push_back(x.label);
        }
        return y;
    }

    bool operator==(const Dataset&) const = default;

private:
    ViewSchema schema_;
    std::vector<MultiViewInstance> instances_;
};

}  // namespace mvm
