// Command-line surface for the prodmetric toolkit.
//
// Exit codes: 0 = completed (a Refuted verdict is a successful answer),
// 1 = input error, 2 = internal/evaluation error.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "prodmetric/checkers.hpp"
#include "prodmetric/core.hpp"
#include "prodmetric/errors.hpp"
#include "prodmetric/spaces.hpp"
#include "prodmetric/topsis.hpp"

namespace {

using namespace prodmetric;

// Splits at commas outside parentheses, so expression-valued conditions
// ("G:min(a,b)+1") survive list syntax.
std::vector<std::string> split_top_level(const std::string& text) {
    std::vector<std::string> parts;
    std::string cur;
    int depth = 0;
    for (char ch : text) {
        if (ch == '(') ++depth;
        if (ch == ')') --depth;
        if (ch == ',' && depth == 0) {
            parts.push_back(cur);
            cur.clear();
            continue;
        }
        cur += ch;
    }
    parts.push_back(cur);
    return parts;
}

std::vector<SemiTriangleCondition> parse_condition_list(const std::string& text) {
    std::vector<SemiTriangleCondition> conds;
    for (const auto& part : split_top_level(text)) {
        if (part.empty()) throw DomainError("empty entry in condition list '" + text + "'");
        conds.push_back(SemiTriangleCondition::parse(part));
    }
    return conds;
}

std::vector<double> parse_vector(const std::string& text, const char* field) {
    std::vector<double> out;
    for (const auto& part : split_top_level(text)) {
        try {
            std::size_t pos = 0;
            out.push_back(std::stod(part, &pos));
            if (pos != part.size()) throw std::invalid_argument(part);
        } catch (const std::exception&) {
            throw DomainError(std::string("cannot parse number '") + part + "' in " + field);
        }
    }
    if (out.empty()) throw DomainError(std::string(field) + " must be a nonempty number list");
    return out;
}

nlohmann::json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DomainError("cannot open file '" + path + "'");
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw DomainError("file '" + path + "' is not valid JSON: " + e.what());
    }
}

struct OutputOptions {
    std::string format = "human";
    std::string out_path;
};

void add_output_flags(CLI::App* cmd, OutputOptions& opts) {
    cmd->add_option("--format", opts.format, "Output format")
        ->check(CLI::IsMember({"human", "structured"}))
        ->envname("PRODMETRIC_FORMAT");
    cmd->add_option("--out", opts.out_path, "Write structured output to this file");
}

void add_search_flags(CLI::App* cmd, SearchConfig& cfg) {
    cmd->add_option("--seed", cfg.seed, "RNG seed")->envname("PRODMETRIC_SEED");
    cmd->add_option("--samples", cfg.samples, "Sample budget per check")
        ->envname("PRODMETRIC_SAMPLES");
    cmd->add_option("--threads", cfg.threads, "Worker threads")->envname("PRODMETRIC_THREADS");
    cmd->add_option("--range-low", cfg.range_low, "Lower magnitude bound for sampling");
    cmd->add_option("--range-high", cfg.range_high, "Upper magnitude bound for sampling");
    cmd->add_option("--boundary-fraction", cfg.boundary_fraction,
                    "Fraction of boundary triplets (c = g(a,b))");
    cmd->add_option("--zero-fraction", cfg.zero_fraction, "Fraction of (0,l,l)-type triplets");
}

// stdout gets the chosen format; --out always receives the structured form so
// it can feed downstream subcommands.
void emit(const OutputOptions& opts, const nlohmann::json& structured, const std::string& human) {
    if (opts.format == "structured") std::cout << structured.dump(2) << "\n";
    else std::cout << human;
    if (!opts.out_path.empty()) {
        std::ofstream out(opts.out_path);
        if (!out) throw DomainError("cannot write to file '" + opts.out_path + "'");
        out << structured.dump(2) << "\n";
    }
}

std::string fmt_vec(const std::vector<double>& x) {
    std::string s = "(";
    for (std::size_t i = 0; i < x.size(); ++i) s += (i ? "," : "") + detail::fmt_double(x[i]);
    return s + ")";
}

std::string verdict_human(const Verdict& v) {
    std::string out = to_string(v.status) + "\n";
    if (!v.detail.empty()) out += "  " + v.detail + "\n";
    if (v.witness_triplet)
        out += "  witness a=" + fmt_vec(v.witness_triplet->a) + " b=" +
               fmt_vec(v.witness_triplet->b) + " c=" + fmt_vec(v.witness_triplet->c) + "\n";
    if (v.witness_point) out += "  witness x=" + fmt_vec(*v.witness_point) + "\n";
    if (v.witness_pair)
        out += "  witness a=" + fmt_vec(v.witness_pair->first) + " b=" +
               fmt_vec(v.witness_pair->second) + "\n";
    if (v.witness_ab)
        out += "  witness (a,b)=(" + detail::fmt_double(v.witness_ab->first) + ", " +
               detail::fmt_double(v.witness_ab->second) + ")\n";
    if (v.status != VerdictStatus::Proved)
        out += "  samples used: " + std::to_string(v.stats.samples_used) + ", seed " +
               std::to_string(v.stats.seed) + "\n";
    return out;
}

std::string space_human(const FiniteSemimetricSpace& s) {
    std::string out =
        std::to_string(s.size()) + " points, diameter " + detail::fmt_double(s.diameter()) + "\n";
    out += s.to_json().dump(2) + "\n";
    return out;
}

int run(int argc, char** argv) {
    CLI::App app{"prodmetric: classification, falsification and construction tools for "
                 "combiner-generated distances"};
    app.require_subcommand(1);

    // classify
    auto* classify_cmd = app.add_subcommand("classify", "Class-membership report for a combiner");
    std::string cl_combiner;
    std::size_t cl_arity = 0;
    SearchConfig cl_cfg;
    OutputOptions cl_out;
    classify_cmd->add_option("--combiner", cl_combiner, "builtin:<name> or expr:<expression>")
        ->required();
    classify_cmd->add_option("--arity", cl_arity, "Number of coordinates n")->required();
    add_search_flags(classify_cmd, cl_cfg);
    add_output_flags(classify_cmd, cl_out);

    // falsify
    auto* falsify_cmd =
        app.add_subcommand("falsify", "Search for a source triplet whose image fails the target");
    std::string fa_combiner, fa_source, fa_target;
    SearchConfig fa_cfg;
    OutputOptions fa_out;
    falsify_cmd->add_option("--combiner", fa_combiner, "builtin:<name> or expr:<expression>")
        ->required();
    falsify_cmd
        ->add_option("--source", fa_source,
                     "Comma-separated per-coordinate conditions, e.g. B:2,B:2")
        ->required();
    falsify_cmd->add_option("--target", fa_target, "Target condition, e.g. M")->required();
    add_search_flags(falsify_cmd, fa_cfg);
    add_output_flags(falsify_cmd, fa_out);

    // implies
    auto* implies_cmd =
        app.add_subcommand("implies", "Pointwise generator order: does condition g imply h?");
    std::string im_g, im_h;
    SearchConfig im_cfg;
    OutputOptions im_out;
    implies_cmd->set_help_flag("--help", "Print this help message and exit");  // frees -h
    implies_cmd->add_option("--g", im_g, "Stronger condition candidate")->required();
    implies_cmd->add_option("--h", im_h, "Weaker condition candidate")->required();
    add_search_flags(implies_cmd, im_cfg);
    add_output_flags(implies_cmd, im_out);

    // oracle
    auto* oracle_cmd =
        app.add_subcommand("oracle", "Exact minimal relaxation constants of a finite space");
    std::string or_space;
    OutputOptions or_out;
    oracle_cmd->add_option("--space", or_space, "Space file ({\"labels\", \"matrix\"})")
        ->required();
    add_output_flags(oracle_cmd, or_out);

    // glue
    auto* glue_cmd = app.add_subcommand(
        "glue", "Glue two spaces, or a chain of triplet blocks, at constant cross-distance");
    std::vector<std::string> gl_spaces;
    std::string gl_blocks;
    OutputOptions gl_out;
    glue_cmd->add_option("--space", gl_spaces, "Space file (give exactly twice to glue a pair)");
    glue_cmd->add_option("--blocks", gl_blocks,
                         "Semicolon-separated triplet blocks, e.g. \"1,2,6;1,1,2\"");
    add_output_flags(glue_cmd, gl_out);

    // product
    auto* product_cmd =
        app.add_subcommand("product", "Cartesian product space with distances combined by F");
    std::vector<std::string> pr_spaces;
    std::string pr_combiner;
    std::size_t pr_cap = kDefaultProductCap;
    OutputOptions pr_out;
    product_cmd->add_option("--space", pr_spaces, "Factor space file (repeatable)")->required();
    product_cmd->add_option("--combiner", pr_combiner, "builtin:<name> or expr:<expression>")
        ->required();
    product_cmd->add_option("--cap", pr_cap, "Maximum number of product points");
    add_output_flags(product_cmd, pr_out);

    // triplet
    auto* triplet_cmd = app.add_subcommand(
        "triplet", "Check or sample multidimensional triangle triplets for a condition list");
    std::string tr_conds, tr_a, tr_b, tr_c;
    std::size_t tr_count = 1;
    SearchConfig tr_cfg;
    OutputOptions tr_out;
    triplet_cmd->add_option("--conds", tr_conds, "Comma-separated conditions, e.g. B:2,M")
        ->required();
    triplet_cmd->add_option("--a", tr_a, "First vector (comma-separated) for a membership check");
    triplet_cmd->add_option("--b", tr_b, "Second vector");
    triplet_cmd->add_option("--c", tr_c, "Third vector");
    triplet_cmd->add_option("--count", tr_count, "Number of triplets to sample");
    add_search_flags(triplet_cmd, tr_cfg);
    add_output_flags(triplet_cmd, tr_out);

    // topsis
    auto* topsis_cmd =
        app.add_subcommand("topsis", "Rank alternatives by closeness to the ideal solutions");
    std::string tp_problem, tp_combiner;
    OutputOptions tp_out;
    topsis_cmd->add_option("--problem", tp_problem, "Decision problem file")->required();
    topsis_cmd->add_option("--combiner", tp_combiner, "builtin:<name> or expr:<expression>")
        ->required();
    add_output_flags(topsis_cmd, tp_out);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    if (classify_cmd->parsed()) {
        Combiner f = Combiner::parse(cl_combiner, cl_arity);
        ClassificationReport rep = classify(f, cl_arity, cl_cfg);
        emit(cl_out, rep.to_json(), rep.to_human());
        return 0;
    }
    if (falsify_cmd->parsed()) {
        auto conds = parse_condition_list(fa_source);
        Combiner f = Combiner::parse(fa_combiner, conds.size());
        Verdict v = falsify(f, conds, SemiTriangleCondition::parse(fa_target), fa_cfg);
        emit(fa_out, v.to_json(), verdict_human(v));
        return 0;
    }
    if (implies_cmd->parsed()) {
        Verdict v = condition_implies(SemiTriangleCondition::parse(im_g),
                                      SemiTriangleCondition::parse(im_h), im_cfg);
        emit(im_out, v.to_json(), verdict_human(v));
        return 0;
    }
    if (oracle_cmd->parsed()) {
        auto space = FiniteSemimetricSpace::from_json(load_json_file(or_space));
        auto violations = validate(space);
        if (!violations.empty()) {
            std::string msg = "space in '" + or_space + "' violates the semimetric axioms:";
            for (const auto& v : violations) msg += "\n  " + v.describe();
            throw DomainError(msg);
        }
        RelaxationProfile p = min_relaxation(space);
        std::string human = "k_b = " + detail::fmt_double(p.k_b) +
                            "\nk_s = " + detail::fmt_double(p.k_s) + "\n";
        auto name3 = [&](const std::optional<std::array<std::size_t, 3>>& t) {
            if (!t) return std::string("none");
            return "(" + space.labels()[(*t)[0]] + ", " + space.labels()[(*t)[1]] + ", " +
                   space.labels()[(*t)[2]] + ")";
        };
        human += "worst_triple_b = " + name3(p.worst_triple_b) + "\n";
        human += "worst_triple_s = " + name3(p.worst_triple_s) + "\n";
        emit(or_out, p.to_json(space), human);
        return 0;
    }
    if (glue_cmd->parsed()) {
        FiniteSemimetricSpace glued;
        if (!gl_blocks.empty()) {
            if (!gl_spaces.empty())
                throw DomainError("give either --space files or --blocks, not both");
            std::vector<Triplet1D> blocks;
            std::stringstream ss(gl_blocks);
            std::string block;
            while (std::getline(ss, block, ';')) {
                auto v = parse_vector(block, "--blocks");
                if (v.size() != 3)
                    throw DomainError("each block needs exactly 3 numbers, got '" + block + "'");
                blocks.push_back({v[0], v[1], v[2]});
            }
            glued = glue_chain(blocks);
        } else if (gl_spaces.size() == 2) {
            glued = glue_pair(FiniteSemimetricSpace::from_json(load_json_file(gl_spaces[0])),
                              FiniteSemimetricSpace::from_json(load_json_file(gl_spaces[1])));
        } else {
            throw DomainError("glue needs either --space given exactly twice or --blocks");
        }
        emit(gl_out, glued.to_json(), space_human(glued));
        return 0;
    }
    if (product_cmd->parsed()) {
        std::vector<FiniteSemimetricSpace> factors;
        for (const auto& path : pr_spaces)
            factors.push_back(FiniteSemimetricSpace::from_json(load_json_file(path)));
        Combiner f = Combiner::parse(pr_combiner, factors.size());
        try {
            FiniteSemimetricSpace prod = product_space(factors, f, pr_cap);
            emit(pr_out, prod.to_json(), space_human(prod));
        } catch (const NotAmenableOnThisInstance& e) {
            // a completed negative answer, not a failure
            nlohmann::json j{{"status", "NotAmenableOnThisInstance"},
                             {"detail", e.what()},
                             {"witness_pair", {e.label_x, e.label_y}}};
            emit(pr_out, j,
                 std::string("NotAmenableOnThisInstance\n  ") + e.what() + "\n  witness pair: " +
                     e.label_x + ", " + e.label_y + "\n");
        }
        return 0;
    }
    if (triplet_cmd->parsed()) {
        auto conds = parse_condition_list(tr_conds);
        const bool check_mode = !tr_a.empty() || !tr_b.empty() || !tr_c.empty();
        if (check_mode) {
            if (tr_a.empty() || tr_b.empty() || tr_c.empty())
                throw DomainError("a membership check needs all of --a, --b, --c");
            TripletND t{parse_vector(tr_a, "--a"), parse_vector(tr_b, "--b"),
                        parse_vector(tr_c, "--c")};
            bool member = is_triplet_nd(conds, t);
            nlohmann::json j{{"is_triplet", member},
                             {"conds", tr_conds},
                             {"a", t.a},
                             {"b", t.b},
                             {"c", t.c}};
            emit(tr_out, j,
                 std::string(member ? "triplet" : "not a triplet") + " for (" + tr_conds + ")\n");
            return 0;
        }
        nlohmann::json arr = nlohmann::json::array();
        std::string human;
        for (std::size_t i = 0; i < tr_count; ++i) {
            TripletND t = sample_triplet(conds, tr_cfg, i);
            arr.push_back({{"a", t.a}, {"b", t.b}, {"c", t.c}});
            human += "a=" + fmt_vec(t.a) + " b=" + fmt_vec(t.b) + " c=" + fmt_vec(t.c) + "\n";
        }
        emit(tr_out, arr, human);
        return 0;
    }
    if (topsis_cmd->parsed()) {
        DecisionProblem p = DecisionProblem::from_json(load_json_file(tp_problem));
        Combiner f = Combiner::parse(tp_combiner, p.n());
        TopsisResult r = rank(p, f);
        std::string human;
        for (const auto& w : r.warnings) human += "warning: " + w + "\n";
        for (std::size_t pos = 0; pos < r.ranking.size(); ++pos) {
            std::size_t i = r.ranking[pos];
            human += std::to_string(pos + 1) + ". " + p.alternatives[i] +
                     "  closeness = " + detail::fmt_double(r.closeness[i]) + "\n";
        }
        emit(tp_out, r.to_json(p), human);
        return 0;
    }
    return 1;  // unreachable: a subcommand is required
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const prodmetric::InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 1;
    } catch (const prodmetric::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 2;
    }
}
