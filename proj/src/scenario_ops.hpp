#pragma once

#include "leglab/core.hpp"
#include "leglab/expr.hpp"
#include "leglab/scenario.hpp"

#include <functional>
#include <initializer_list>

namespace leglab::cli::detail {

// State shared by one operation run: parameter access with diagnostics, and the
// report sections the operation fills in.
class Context {
public:
    Context(const Scenario& s, const RunOptions& opt);

    const Scenario& scenario() const { return s_; }
    std::uint64_t seed() const { return seed_; }
    int jobs() const { return opt_.jobs; }
    double grid_scale() const { return opt_.grid_scale; }

    // Throws InputError naming the first parameter outside the list.
    void allow(std::initializer_list<const char*> keys) const;
    bool has(const char* key) const { return s_.params.contains(key); }
    const Json& raw(const char* key) const;

    double number(const char* key, double def) const;
    double positive(const char* key, double def) const;
    Eigen::Index count(const char* key, Eigen::Index def, Eigen::Index min = 1) const;
    bool flag(const char* key, bool def) const;
    std::string text(const char* key, const std::string& def) const;
    std::vector<double> numbers(const char* key, std::vector<double> def) const;
    expr::Expr function(const char* key, std::vector<std::string> vars, const Json& def) const;
    // Sub-object accessors use the same diagnostics with a nested pointer.
    const Json& object(const char* key) const;

    // Scenario tolerance (or the default) times --tol-scale.
    double tol(const std::string& key, double def) const;
    // Grid size scaled by --grid-scale, at least min.
    Eigen::Index grid(Eigen::Index n, Eigen::Index min = 2) const;

    InputError bad(const std::string& field, const std::string& message) const;

    // Runs f and turns library exceptions into error records. Returns false on failure.
    bool step(const std::string& name, const std::function<void()>& f);

    Json results = Json::object();
    Json metadata = Json::object();
    Json plot_data = Json::object();
    Json errors = Json::array();

private:
    const Scenario& s_;
    const RunOptions& opt_;
    std::uint64_t seed_;
};

Json skipped(const std::string& reason);

using Operation = std::function<void(Context&)>;
const std::map<std::string, Operation>& registry();

}  // namespace leglab::cli::detail
