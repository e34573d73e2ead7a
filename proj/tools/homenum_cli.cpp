// Command-line front end: decide / solve / enum / cqe / kcore / gen / oracle
// / bench over structure files. See README for the file formats.

#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "homenum/cqe.hpp"
#include "homenum/endoseq.hpp"
#include "homenum/errors.hpp"
#include "homenum/extension.hpp"
#include "homenum/families.hpp"
#include "homenum/io.hpp"
#include "homenum/kcore.hpp"
#include "homenum/oracle.hpp"
#include "homenum/structures.hpp"
#include "homenum/treewidth.hpp"

namespace {

using namespace homenum;

Structure load_structure(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(0, path + ": cannot open file");
    try {
        return parse_structure(in);
    } catch (const ParseError& e) {
        throw ParseError(e.line(), path + ": " + e.message());
    }
}

// Auto width for decide/solve/cqe when neither --k nor --decomp is given:
// exact treewidth for small universes, the peel widths for large ones.
int pick_width(const Structure& A) {
    Graph g = gaifman_graph(A);
    if (g.n <= homenum::detail::kSubsetDpLimit) return g.n == 0 ? 0 : g.n - 1;
    for (int k = 0; k <= homenum::detail::kPeelWidthLimit; ++k) {
        if (decompose_graph(g, k)) return k;
    }
    throw SizeGuardError(
        "structure is too large for automatic width selection; pass --k or --decomp");
}

std::vector<int> parse_projection(const Structure& A, const std::string& list) {
    std::vector<int> Y;
    if (list.empty()) return Y;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) throw DomainError("empty name in projection list");
        auto e = A.element_index(item);
        if (!e) throw DomainError("unknown projection element '" + item + "'");
        Y.push_back(*e);
    }
    return Y;
}

std::string format_projection(const PartialAssignment& p, const Structure& A, const Structure& B,
                              const std::vector<int>& Y) {
    std::ostringstream out;
    for (size_t i = 0; i < Y.size(); ++i) {
        if (i) out << " ";
        out << A.element_name(Y[i]) << ":" << B.element_name(p.at(Y[i]));
    }
    return out.str();
}

struct ModeOpts {
    std::string endoseq_file;
    int kcore_k = -1;
    int tw_k = -1;
    int k_override = -1;
};

// Turns the selected enum/bench mode into a validated-ready sequence.
EndoSequence build_sequence(const Structure& A, const ModeOpts& mode) {
    int chosen = (mode.endoseq_file.empty() ? 0 : 1) + (mode.kcore_k >= 0 ? 1 : 0) +
                 (mode.tw_k >= 0 ? 1 : 0);
    if (chosen != 1) throw DomainError("choose exactly one of --endoseq, --kcore, --tw");

    if (!mode.endoseq_file.empty()) {
        std::ifstream in(mode.endoseq_file);
        if (!in) throw ParseError(0, mode.endoseq_file + ": cannot open file");
        EndoSequence seq;
        try {
            seq = read_endo_sequence(in, A);
        } catch (const ParseError& e) {
            throw ParseError(e.line(), mode.endoseq_file + ": " + e.message());
        }
        if (mode.k_override >= 0) seq.width = mode.k_override;
        return seq;
    }
    if (mode.kcore_k >= 0) {
        KCoreResult kc = k_core(A, mode.kcore_k);
        return sequence_from_retractions(A, kc.steps, mode.kcore_k);
    }
    // --tw: the trivial one-level sequence; fail early with a width error
    if (!decompose(A, mode.tw_k)) {
        throw WidthExceededError("source structure exceeds width " + std::to_string(mode.tw_k));
    }
    EndoSequence seq;
    seq.width = mode.tw_k;
    std::vector<int> all(static_cast<size_t>(A.size()));
    for (int i = 0; i < A.size(); ++i) all[static_cast<size_t>(i)] = i;
    seq.levels.push_back(std::move(all));
    return seq;
}

ExtensionQuery whole_structure_query(const Structure& A) {
    ExtensionQuery q;
    q.seed = PartialAssignment(A.size());
    q.region.resize(static_cast<size_t>(A.size()));
    for (int i = 0; i < A.size(); ++i) q.region[static_cast<size_t>(i)] = i;
    return q;
}

int run_decide_or_solve(bool solve_mode, const std::string& src, const std::string& dst, int k,
                        const std::string& decomp_file) {
    Structure A = load_structure(src);
    Structure B = load_structure(dst);
    ExtensionQuery q = whole_structure_query(A);

    if (!decomp_file.empty()) {
        std::ifstream in(decomp_file);
        if (!in) throw ParseError(0, decomp_file + ": cannot open file");
        TreeDecomposition td;
        try {
            td = parse_decomposition(in, A);
        } catch (const ParseError& e) {
            throw ParseError(e.line(), decomp_file + ": " + e.message());
        }
        std::string reason;
        if (!validate(A, td, &reason)) {
            throw DomainError("supplied decomposition is invalid: " + reason);
        }
        homenum::detail::RegionContext rc = homenum::detail::compile_region(A, q.region);
        if (!homenum::detail::ext_decide(A, B, rc, q.seed, 0, &td)) {
            std::cout << "no\n";
            return 0;
        }
        if (!solve_mode) {
            std::cout << "yes\n";
            return 0;
        }
        // refix variables under the user decomposition
        PartialAssignment cur = q.seed;
        for (int x : rc.region) {
            if (cur.defined(x)) continue;
            for (int b = 0; b < B.size(); ++b) {
                cur.assign(x, b);
                if (homenum::detail::ext_decide(A, B, rc, cur, 0, &td)) break;
                cur.unassign(x);
            }
        }
        std::cout << format_hom(cur, A, B) << "\n";
        return 0;
    }

    if (k < 0) k = pick_width(A);
    if (!solve_mode) {
        std::cout << (homomorphism_ext(A, B, q, k) ? "yes" : "no") << "\n";
        return 0;
    }
    auto w = first_extension(A, B, q, k);
    if (!w) {
        std::cout << "no\n";
    } else {
        std::cout << format_hom(*w, A, B) << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"homomorphism enumeration for finite relational structures"};
    app.require_subcommand(1);

    std::string src, dst, decomp_file, project_list, family;
    int k = -1, fam_n = 0;
    long limit = 0;
    ModeOpts mode;

    auto add_mode_opts = [&](CLI::App* sub) {
        sub->add_option("--endoseq", mode.endoseq_file, "endomorphism sequence file");
        sub->add_option("--kcore", mode.kcore_k, "retract to the k-core first, bound k");
        sub->add_option("--tw", mode.tw_k, "treat the whole structure as one level, width k");
        sub->add_option("--k", mode.k_override, "override the width of an --endoseq file");
        sub->add_option("--limit", limit, "stop after this many answers (0 = all)");
    };

    auto* cmd_decide = app.add_subcommand("decide", "does a homomorphism exist?");
    cmd_decide->add_option("source", src)->required();
    cmd_decide->add_option("target", dst)->required();
    cmd_decide->add_option("--k", k, "width bound for the extension engine");
    cmd_decide->add_option("--decomp", decomp_file, "tree decomposition file for the source");

    auto* cmd_solve = app.add_subcommand("solve", "print one homomorphism or 'no'");
    cmd_solve->add_option("source", src)->required();
    cmd_solve->add_option("target", dst)->required();
    cmd_solve->add_option("--k", k, "width bound for the extension engine");
    cmd_solve->add_option("--decomp", decomp_file, "tree decomposition file for the source");

    auto* cmd_enum = app.add_subcommand("enum", "enumerate all homomorphisms");
    cmd_enum->add_option("source", src)->required();
    cmd_enum->add_option("target", dst)->required();
    add_mode_opts(cmd_enum);

    auto* cmd_cqe = app.add_subcommand("cqe", "enumerate distinct projections");
    cmd_cqe->add_option("source", src)->required();
    cmd_cqe->add_option("target", dst)->required();
    cmd_cqe->add_option("--project", project_list, "comma-separated projection elements");
    cmd_cqe->add_option("--k", k, "width bound for the source structure");
    cmd_cqe->add_option("--limit", limit, "stop after this many answers (0 = all)");

    auto* cmd_kcore = app.add_subcommand("kcore", "print the k-core retraction chain");
    cmd_kcore->add_option("source", src)->required();
    cmd_kcore->add_option("--k", k, "retraction size bound")->required();

    auto* cmd_gen = app.add_subcommand("gen", "generate a named instance family");
    cmd_gen->add_option("family", family)->required();
    cmd_gen->add_option("n", fam_n)->required();

    auto* cmd_oracle = app.add_subcommand("oracle", "brute-force reference enumeration");
    cmd_oracle->add_option("source", src)->required();
    cmd_oracle->add_option("target", dst)->required();
    cmd_oracle->add_option("--project", project_list, "comma-separated projection elements");

    auto* cmd_bench = app.add_subcommand("bench", "measure enumeration delay, report JSON");
    cmd_bench->add_option("--source", src, "source structure file");
    cmd_bench->add_option("--family", family, "generate the source from a family");
    cmd_bench->add_option("--n", fam_n, "family size");
    cmd_bench->add_option("--target", dst, "target structure file")->required();
    add_mode_opts(cmd_bench);

    try {
        app.parse(argc, argv);

        if (cmd_decide->parsed() || cmd_solve->parsed()) {
            return run_decide_or_solve(cmd_solve->parsed(), src, dst, k, decomp_file);
        }

        if (cmd_enum->parsed()) {
            Structure A = load_structure(src);
            Structure B = load_structure(dst);
            long count = 0;
            if (A.size() == 0) {
                std::cout << "\n" << std::flush;
                return 0;
            }
            EndoSequence seq = build_sequence(A, mode);
            enumerate_wpd(A, B, seq, [&](const Homomorphism& h) {
                std::cout << format_hom(h, A, B) << "\n" << std::flush;
                ++count;
                return limit == 0 || count < limit;
            });
            if (count == 0) std::cout << "no\n";
            return 0;
        }

        if (cmd_cqe->parsed()) {
            Structure A = load_structure(src);
            Structure B = load_structure(dst);
            std::vector<int> Y = parse_projection(A, project_list);
            if (k < 0) k = pick_width(A);
            long count = 0;
            cqe_enumerate(A, B, Y, k, [&](const PartialAssignment& p) {
                std::cout << format_projection(p, A, B, Y) << "\n" << std::flush;
                ++count;
                return limit == 0 || count < limit;
            });
            if (count == 0) std::cout << "no\n";
            return 0;
        }

        if (cmd_kcore->parsed()) {
            Structure A = load_structure(src);
            KCoreResult kc = k_core(A, k);
            EndoSequence seq = sequence_from_retractions(A, kc.steps, k);
            std::cout << serialize_endo_sequence(seq, A);
            return 0;
        }

        if (cmd_gen->parsed()) {
            std::cout << serialize_structure(generate_family(family, fam_n));
            return 0;
        }

        if (cmd_oracle->parsed()) {
            Structure A = load_structure(src);
            Structure B = load_structure(dst);
            long count = 0;
            if (cmd_oracle->count("--project") > 0) {
                std::vector<int> Y = parse_projection(A, project_list);
                for (const auto& p : brute_projections(A, B, Y)) {
                    std::cout << format_projection(p, A, B, Y) << "\n";
                    ++count;
                }
            } else {
                for (const auto& h : brute_homs(A, B)) {
                    std::cout << format_hom(h, A, B) << "\n";
                    ++count;
                }
            }
            if (count == 0) std::cout << "no\n";
            return 0;
        }

        if (cmd_bench->parsed()) {
            if (src.empty() == family.empty()) {
                throw DomainError("bench needs exactly one of --source or --family/--n");
            }
            Structure A = family.empty() ? load_structure(src) : generate_family(family, fam_n);
            Structure B = load_structure(dst);
            if (mode.endoseq_file.empty() && mode.kcore_k < 0 && mode.tw_k < 0) {
                mode.kcore_k = 1; // default pipeline
            }

            using clock = std::chrono::steady_clock;
            auto ms_since = [](clock::time_point a, clock::time_point b) {
                return std::chrono::duration<double, std::milli>(b - a).count();
            };

            long count = 0;
            double first_ms = 0;
            std::vector<double> gaps;
            auto t0 = clock::now();
            auto last = t0;

            auto sink = [&](const Homomorphism&) {
                auto now = clock::now();
                if (count == 0) {
                    first_ms = ms_since(t0, now);
                } else {
                    gaps.push_back(ms_since(last, now));
                }
                last = now;
                ++count;
                return limit == 0 || count < limit;
            };

            if (A.size() == 0) {
                sink(PartialAssignment(0));
            } else {
                EndoSequence seq = build_sequence(A, mode);
                enumerate_wpd(A, B, seq, sink);
            }
            if (count == 0) first_ms = ms_since(t0, clock::now());

            double max_gap = 0;
            for (double g : gaps) max_gap = std::max(max_gap, g);
            nlohmann::json report;
            report["first_ms"] = first_ms;
            report["max_gap_ms"] = max_gap;
            report["count"] = count;
            report["per_gap"] = gaps;
            std::cout << report.dump() << "\n";
            return 0;
        }
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const homenum::ParseError& e) {
        std::cerr << "error: parse: " << e.what() << "\n";
        return 2;
    } catch (const WidthExceededError& e) {
        std::cerr << "error: width-exceeded: " << e.what() << "\n";
        return 3;
    } catch (const InvalidSequenceError& e) {
        std::cerr << "error: invalid-sequence: " << e.what() << "\n";
        return 4;
    } catch (const SizeGuardError& e) {
        std::cerr << "error: size-guard: " << e.what() << "\n";
        return 5;
    } catch (const DomainError& e) {
        std::cerr << "error: invalid-input: " << e.what() << "\n";
        return 6;
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
