//
// predicate_json.hpp
//
// Copyright 2026 The Compass Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#pragma once

#include <json.hpp>

#include "compass/core.hpp"

namespace compass {

// Wire form: {"and":[...]} | {"or":[...]} | {"attr":i,"lo":x,"hi":y} | {"true":true}

inline nlohmann::json predicate_to_json(const Predicate& p) {
    nlohmann::json j;
    switch (p.kind()) {
        case Predicate::Kind::True:
            j["true"] = true;
            break;
        case Predicate::Kind::Range:
            j["attr"] = p.attr_index();
            j["lo"] = p.interval().lo;
            j["hi"] = p.interval().hi;
            break;
        case Predicate::Kind::And:
        case Predicate::Kind::Or: {
            nlohmann::json children = nlohmann::json::array();
            for (const Predicate& c : p.children()) {
                children.push_back(predicate_to_json(c));
            }
            j[p.kind() == Predicate::Kind::And ? "and" : "or"] = std::move(children);
            break;
        }
    }
    return j;
}

inline Predicate predicate_from_json(const nlohmann::json& j) {
    auto fail = [&](const char* why) -> Predicate {
        throw std::invalid_argument(std::string("predicate JSON: ") + why + " in node " + j.dump());
    };
    if (!j.is_object()) {
        return fail("expected an object");
    }
    if (j.contains("true")) {
        if (!j["true"].is_boolean() || !j["true"].get<bool>()) {
            return fail("\"true\" must hold the value true");
        }
        return Predicate::always_true();
    }
    if (j.contains("attr")) {
        if (!j["attr"].is_number_unsigned() && !j["attr"].is_number_integer()) {
            return fail("\"attr\" must be a non-negative integer");
        }
        if (!j.contains("lo") || !j.contains("hi") || !j["lo"].is_number() || !j["hi"].is_number()) {
            return fail("range leaf needs numeric \"lo\" and \"hi\"");
        }
        const auto attr = j["attr"].get<std::int64_t>();
        if (attr < 0) {
            return fail("\"attr\" must be a non-negative integer");
        }
        const double lo = j["lo"].get<double>();
        const double hi = j["hi"].get<double>();
        if (lo > hi) {
            return fail("range leaf has lo > hi");
        }
        return Predicate::range(static_cast<std::size_t>(attr), lo, hi);
    }
    const bool is_and = j.contains("and");
    const bool is_or = j.contains("or");
    if (is_and || is_or) {
        const nlohmann::json& arr = j[is_and ? "and" : "or"];
        if (!arr.is_array() || arr.empty()) {
            return fail("\"and\"/\"or\" must hold a non-empty array");
        }
        std::vector<Predicate> children;
        children.reserve(arr.size());
        for (const auto& c : arr) {
            children.push_back(predicate_from_json(c));
        }
        return is_and ? Predicate::conjunction(std::move(children))
                      : Predicate::disjunction(std::move(children));
    }
    return fail("unknown node shape");
}

} // namespace compass
