// tools/dsc.cpp

// Copyright 2026  The dsc Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// Command-line front end: synthetic corpora, the frame classifier, lattice
// pruning, single-pass training and evaluation, and the full cascade.

#include "dsc/dsc.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace dsc;

namespace {

    label_set read_label_list(fs::path const& p)
    {
        return read_file<label_set>(p, [](std::istream& is) {
            label_set labels;
            std::string line;
            while (std::getline(is, line)) {
                for (auto tok : text::split(line)) {
                    labels.add(std::string(tok));
                }
            }
            if (labels.size() == 0) {
                throw error("empty label list");
            }
            return labels;
        });
    }

    void write_label_list(fs::path const& p, label_set const& labels)
    {
        write_file(p, [&](std::ostream& os) {
            for (auto const& n : labels.names()) {
                os << n << '\n';
            }
        });
    }

    segment_path read_single_transcription(fs::path const& p, label_set& labels)
    {
        auto ts = read_file<std::vector<transcription>>(p,
            [&](std::istream& is) { return read_transcriptions(is, labels); });
        if (ts.size() != 1) {
            throw error(p.string() + ": expected exactly one utterance");
        }
        return ts.front().path;
    }

    // <file> or every <dir>/*<ext>.
    std::vector<fs::path> inputs_of(fs::path const& in, std::string const& ext)
    {
        if (fs::is_directory(in)) {
            return list_files(in, ext);
        }
        return { in };
    }

    // ---- synth ----------------------------------------------------------

    void synth_generate(fs::path const& spec_file, fs::path const& out, int first_index)
    {
        auto spec = read_file<generator_spec>(spec_file,
            [](std::istream& is) { return read_generator_spec(is); });
        auto labels = numbered_labels(spec.num_labels);
        write_label_list(out / "labels", labels);
        for (auto const& u : generate(spec, first_index)) {
            write_file(out / (u.id + ".frames"), [&](std::ostream& os) { write_frames(os, u.frames); });
            write_file(out / (u.id + ".trn"), [&](std::ostream& os) {
                write_transcription(os, transcription { u.id, u.gold }, labels, false);
            });
            write_file(out / (u.id + ".lab"), [&](std::ostream& os) {
                for (int l : u.frame_labels()) {
                    os << labels.name(l) << '\n';
                }
            });
        }
        std::cout << "utterances\t" << spec.utterances << "\targmax-frame-error\t"
                  << argmax_frame_error(generate(spec, first_index)) << '\n';
    }

    // ---- acoustics ------------------------------------------------------

    std::vector<labeled_frames> load_labeled_frames(fs::path const& dir, label_set& labels)
    {
        std::vector<labeled_frames> result;
        for (auto const& p : list_files(dir, ".frames")) {
            labeled_frames lf;
            lf.frames = read_file<frame_matrix>(p, [](std::istream& is) { return read_frames(is); });
            int before = labels.size();
            auto gold = read_single_transcription(p.parent_path() / (p.stem().string() + ".trn"), labels);
            if (labels.size() != before) {
                throw error(p.stem().string() + ": transcription uses a label outside the label list");
            }
            if (!gold.covers(lf.frames.num_frames())) {
                throw error(p.stem().string() + ": transcription does not cover the frames");
            }
            lf.gold = frame_labels_of(gold);
            result.push_back(std::move(lf));
        }
        if (result.empty()) {
            throw error("no .frames files in " + dir.string());
        }
        return result;
    }

    void acoustics_train(fs::path const& data, fs::path labels_file, fs::path const& out,
        int radius, frame_training_options const& opt)
    {
        if (labels_file.empty()) {
            labels_file = data / "labels";
        }
        auto labels = read_label_list(labels_file);
        auto corpus = load_labeled_frames(data, labels);
        frame_classifier clf(labels, corpus.front().frames.dim(), radius);
        std::cout << "epoch\tparity\tloss-per-frame\tseconds\n";
        for (auto const& s : train_frame_classifier(clf, corpus, opt)) {
            std::cout << s.epoch << '\t' << parity_name(s.parity) << '\t' << s.loss_per_frame << '\t'
                      << s.seconds << '\n';
        }
        std::cout << "frame-error\t" << frame_error_rate(clf, corpus) << '\n';
        write_file(out, [&](std::ostream& os) { write_classifier(os, clf); });
    }

    void acoustics_classify(fs::path const& model_file, fs::path const& in, fs::path const& out,
        subsample_parity parity)
    {
        auto clf = read_file<frame_classifier>(model_file,
            [](std::istream& is) { return read_classifier(is); });
        double seconds = 0;
        long frames = 0;
        for (auto const& p : inputs_of(in, ".frames")) {
            auto x = read_file<frame_matrix>(p, [](std::istream& is) { return read_frames(is); });
            auto begin = std::chrono::steady_clock::now();
            auto post = subsample_forward(clf, x, parity);
            seconds += seconds_since(begin);
            frames += x.num_frames();
            auto id = p.stem().string();
            write_file(out / (id + ".post"), [&](std::ostream& os) { write_posteriors(os, post); });
            auto trn = p.parent_path() / (id + ".trn");
            if (fs::exists(trn)) {
                fs::copy_file(trn, out / (id + ".trn"), fs::copy_options::overwrite_existing);
            }
        }
        std::cout << "frames\t" << frames << "\tparity\t" << parity_name(parity) << "\tseconds\t"
                  << seconds << '\n';
    }

    // ---- prune ----------------------------------------------------------

    void prune_command(prune_params const& p, fs::path const& in, fs::path const& out)
    {
        label_set labels;
        auto f = read_file<fst>(in, [&](std::istream& is) { return read_lattice(is, labels); });
        auto begin = std::chrono::steady_clock::now();
        auto pruned = prune(f, p);
        double seconds = seconds_since(begin);
        write_file(out, [&](std::ostream& os) { write_lattice(os, pruned, labels); });
        std::cout << "method=" << prune_method_name(p.method) << "\talpha=" << p.alpha
                  << "\tvertices_before=" << f.vertex_count() << "\tedges_before=" << f.edge_count()
                  << "\tvertices_after=" << pruned.vertex_count()
                  << "\tedges_after=" << pruned.edge_count() << "\tseconds=" << seconds << '\n';
    }

    // ---- train / eval ---------------------------------------------------

    // A pass configuration uses the per-pass cascade keys without the
    // "pass<i>." prefix, plus the global max_duration and samples.
    cascade_config read_pass_config(fs::path const& p)
    {
        static std::string const pass_keys[] = { "templates", "step_size", "epochs", "cost_scale",
            "early_stopping", "seed" };
        return read_file<cascade_config>(p, [](std::istream& is) {
            std::stringstream rewritten;
            std::string line;
            while (std::getline(is, line)) {
                auto key = text::split(line.substr(0, line.find('=')));
                bool per_pass = key.size() == 1
                    && std::find(std::begin(pass_keys), std::end(pass_keys), key[0]) != std::end(pass_keys);
                rewritten << (per_pass ? "pass1." : "") << line << '\n';
            }
            rewritten << "passes = 1\n";
            return read_cascade_config(rewritten);
        });
    }

    // Utterances named in a multi-utterance transcription file, with their
    // posteriors (and lattices when `lattices` is set).
    std::vector<utterance> load_listed(fs::path const& gold_file, fs::path const& posteriors,
        fs::path const& lattices, label_set& labels)
    {
        label_set names;
        auto ts = read_file<std::vector<transcription>>(gold_file,
            [&](std::istream& is) { return read_transcriptions(is, names); });
        std::vector<utterance> result;
        for (auto const& t : ts) {
            if (t.id.empty()) {
                throw error(gold_file.string() + ": utterance without an id line");
            }
            utterance u;
            u.id = t.id;
            u.post = read_file<posterior_matrix>(posteriors / (t.id + ".post"),
                [](std::istream& is) { return read_posteriors(is); });
            if (labels.size() == 0) {
                labels = u.post.labels();
            } else if (!(u.post.labels() == labels)) {
                throw error(t.id + ": label alphabet differs from the rest of the corpus");
            }
            for (auto s : t.path.segments) {
                s.label = labels.id(names.name(s.label));
                u.gold.segments.push_back(s);
            }
            if (!u.gold.covers(u.post.num_frames())) {
                throw error(t.id + ": transcription does not cover the utterance");
            }
            if (!lattices.empty()) {
                u.lattice = read_file<fst>(lattices / (t.id + ".lat"),
                    [&](std::istream& is) { return read_lattice(is, labels); });
            }
            result.push_back(std::move(u));
        }
        return result;
    }

    std::optional<bigram_table> bigram_for(feature_template_set const& ts,
        std::vector<utterance> const& train, fs::path const& lm_file, label_set const& labels)
    {
        if (!ts.has(template_kind::bigram_lm)) {
            return std::nullopt;
        }
        if (!lm_file.empty()) {
            return read_file<bigram_table>(lm_file, [&](std::istream& is) { return read_bigram(is, labels); });
        }
        std::vector<segment_path> gold;
        for (auto const& u : train) {
            gold.push_back(u.gold);
        }
        return estimate_bigram_lm(gold, labels.size());
    }

    void train_command(fs::path const& pass_config, fs::path const& lattices, fs::path const& posteriors,
        fs::path const& gold, fs::path const& dev_gold, fs::path const& out_model, fs::path const& log_file,
        fs::path const& lm_out)
    {
        auto cfg = read_pass_config(pass_config);
        label_set labels;
        auto train = load_listed(gold, posteriors, lattices, labels);
        auto dev = dev_gold.empty() ? std::vector<utterance> {}
                                    : load_listed(dev_gold, posteriors, lattices, labels);
        auto templates = cfg.templates(cfg.passes[0], labels.size());
        auto lm = bigram_for(templates, train, {}, labels);
        auto r = train_pass(model(templates, labels), train, dev, cfg.passes[0].train, lm ? &*lm : nullptr);

        std::ofstream extra;
        std::ostream* log = &std::cout;
        if (!log_file.empty()) {
            bool fresh = !fs::exists(log_file);
            extra.open(log_file, std::ios::app);
            if (!extra) {
                throw error("cannot write " + log_file.string());
            }
            log = &extra;
            if (fresh) {
                extra << "epoch\ttrain-loss\tdev-per\twall-seconds\n";
            }
        } else {
            std::cout << "epoch\ttrain-loss\tdev-per\twall-seconds\n";
        }
        for (auto const& e : r.epochs) {
            *log << e.epoch << '\t' << e.train_loss << '\t' << e.dev_per << '\t' << e.wall_seconds << '\n';
            if (e.flagged > 0) {
                std::cerr << "epoch " << e.epoch << ": " << e.flagged
                          << " utterances had their gold path pruned away\n";
            }
        }
        write_file(out_model, [&](std::ostream& os) { write_model(os, r.best); });
        if (lm && !lm_out.empty()) {
            write_file(lm_out, [&](std::ostream& os) { write_bigram(os, *lm, labels); });
        }
        std::cerr << "kept epoch " << r.best_epoch << '\n';
    }

    void eval_command(fs::path const& model_file, fs::path const& posteriors, fs::path const& gold,
        fs::path const& lattices, fs::path const& lm_file, double frame_shift)
    {
        auto m = read_file<model>(model_file, [](std::istream& is) { return read_model(is); });
        label_set labels = m.labels;
        auto data = load_listed(gold, posteriors, lattices, labels);
        if (m.templates.has(template_kind::bigram_lm) && lm_file.empty()) {
            throw error("the model scores a bigram LM; pass --lm");
        }
        auto lm = bigram_for(m.templates, data, lm_file, labels);
        bigram_table const* lmp = lm ? &*lm : nullptr;

        std::cout << "utterance\tper\toracle\tdensity\trtf\n";
        long dist = 0, ref_total = 0, oracle_total = 0, edges = 0;
        rtf_accumulator rtf;
        for (auto const& u : data) {
            auto ref = u.gold.labels();
            auto begin = std::chrono::steady_clock::now();
            auto d = decode_utterance(m, u, lmp);
            double seconds = seconds_since(begin);
            double audio = u.post.num_frames() * frame_shift;
            rtf.add(seconds, audio);
            long e = d ? edit_distance(d->path.labels(), ref).distance : static_cast<long>(ref.size());
            auto space = hypothesis_of(u, m.templates.max_duration());
            long o = space.edge_count() == 0 ? static_cast<long>(ref.size())
                                             : oracle_error_rate(space, ref).distance;
            dist += e;
            oracle_total += o;
            ref_total += static_cast<long>(ref.size());
            edges += space.edge_count();
            double n = std::max<double>(1, static_cast<double>(ref.size()));
            std::cout << u.id << '\t' << e / n << '\t' << o / n << '\t' << density(space, ref.size())
                      << '\t' << real_time_factor(seconds, audio) << '\n';
        }
        double n = std::max<double>(1, static_cast<double>(ref_total));
        std::cout << "corpus\t" << dist / n << '\t' << oracle_total / n << '\t' << edges / n << '\t'
                  << rtf.value() << '\n';
    }

    // ---- cascade --------------------------------------------------------

    cascade_config load_cascade_config(fs::path const& p)
    {
        return read_file<cascade_config>(p, [](std::istream& is) { return read_cascade_config(is); });
    }

    void cascade_train(fs::path const& config, fs::path const& data, fs::path out)
    {
        auto cfg = load_cascade_config(config);
        if (out.empty()) {
            out = data / "cascade";
        }
        label_set labels;
        auto train = load_split(data / "train", labels);
        auto dev = fs::exists(data / "dev") ? load_split(data / "dev", labels) : std::vector<utterance> {};
        auto t = run_cascade_train(cfg, labels, std::move(train), std::move(dev), out / "lattices", &std::cerr);
        write_models(out, t, labels);
        write_file(out / "cascade.conf", [&](std::ostream& os) { write_cascade_config(os, cfg); });
        write_file(out / "learning.tsv", [&](std::ostream& os) {
            os << "pass\tepoch\ttrain-loss\tdev-per\twall-seconds\n";
            for (auto const& p : t.passes) {
                for (auto const& e : p.epochs) {
                    os << p.pass << '\t' << e.epoch << '\t' << e.train_loss << '\t' << e.dev_per << '\t'
                       << e.wall_seconds << '\n';
                }
            }
        });
        write_file(out / "lattices.tsv", [&](std::ostream& os) {
            os << "pass\tsplit\tedges-before\tedges-after\tremoved\tdensity\toracle-error\tempty\n";
            for (auto const& p : t.passes) {
                if (p.train_lattices.utterances == 0) {
                    continue;
                }
                for (auto const& [split, s] : { std::pair { "train", &p.train_lattices },
                         std::pair { "dev", &p.dev_lattices } }) {
                    os << p.pass << '\t' << split << '\t' << s->edges_before << '\t' << s->edges_after
                       << '\t' << s->removed_fraction() << '\t' << s->density() << '\t'
                       << s->oracle_error() << '\t' << s->empty << '\n';
                }
            }
        });
        write_file(out / "training.tsv",
            [&](std::ostream& os) { write_training_table(os, "cascade", t.passes, 0.0); });
        std::cout << "pass\tbest-epoch\tdev-per\ttrain-seconds\n";
        for (auto const& p : t.passes) {
            std::cout << p.pass << '\t' << p.best_epoch << '\t' << p.dev_per << '\t' << p.train_seconds
                      << '\n';
        }
    }

    void cascade_decode(fs::path const& config, fs::path const& models_dir, fs::path const& in,
        fs::path const& out, fs::path const& classifier_file, fs::path const& timing_file)
    {
        auto cfg = load_cascade_config(config);
        std::vector<model> models;
        for (std::size_t i = 0; i < cfg.passes.size(); ++i) {
            models.push_back(read_file<model>(models_dir / ("pass" + std::to_string(i + 1) + ".model"),
                [](std::istream& is) { return read_model(is); }));
        }
        label_set labels = models.front().labels;
        std::optional<bigram_table> lm;
        if (fs::exists(models_dir / "bigram.lm")) {
            lm = read_file<bigram_table>(models_dir / "bigram.lm",
                [&](std::istream& is) { return read_bigram(is, labels); });
        } else if (cfg.uses_bigram(labels.size())) {
            throw error("the cascade scores a bigram LM but " + (models_dir / "bigram.lm").string()
                + " is missing");
        }
        std::optional<frame_classifier> clf;
        if (!classifier_file.empty()) {
            clf = read_file<frame_classifier>(classifier_file,
                [](std::istream& is) { return read_classifier(is); });
        }

        timing_accumulator timing;
        long dist = 0, ref_total = 0;
        int fell_back = 0;
        for (auto const& p : inputs_of(in, clf ? ".frames" : ".post")) {
            cascade_decode_result r;
            if (clf) {
                auto x = read_file<frame_matrix>(p, [](std::istream& is) { return read_frames(is); });
                r = run_cascade_decode(models, cfg, *clf, x, lm ? &*lm : nullptr);
            } else {
                auto post = read_file<posterior_matrix>(p, [](std::istream& is) { return read_posteriors(is); });
                if (!(post.labels() == labels)) {
                    throw error(p.string() + ": label alphabet differs from the models'");
                }
                r = run_cascade_decode(models, cfg, post, lm ? &*lm : nullptr);
            }
            timing.add(r);
            fell_back += r.fell_back;
            auto id = p.stem().string();
            if (!out.empty()) {
                write_file(out / (id + ".trn"), [&](std::ostream& os) {
                    write_transcription(os, transcription { id, r.path }, labels, false);
                });
            }
            auto trn = p.parent_path() / (id + ".trn");
            if (fs::exists(trn)) {
                label_set names = labels;
                auto ref = read_single_transcription(trn, names).labels();
                dist += edit_distance(r.path.labels(), ref).distance;
                ref_total += static_cast<long>(ref.size());
            }
        }
        std::ofstream file;
        std::ostream& os = timing_file.empty() ? std::cout : (file.open(timing_file), file);
        if (!os) {
            throw error("cannot write " + timing_file.string());
        }
        write_timing_table(os, { timing.row("cascade") }, static_cast<int>(cfg.passes.size()));
        if (ref_total > 0) {
            std::cerr << "per " << static_cast<double>(dist) / ref_total << '\n';
        }
        if (fell_back > 0) {
            std::cerr << fell_back << " utterances fell back to an earlier pass's best path\n";
        }
    }

}

int main(int argc, char** argv)
{
    CLI::App app { "Discriminative segmental cascades for phone recognition" };
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "Synthetic corpora with known ground truth");
    synth->require_subcommand(1);
    auto* gen = synth->add_subcommand("generate", "Write frames, transcriptions and frame labels");
    fs::path spec_file, synth_out;
    int first_index = 0;
    gen->add_option("--spec", spec_file, "Generator spec file")->required();
    gen->add_option("--out", synth_out, "Output directory")->required();
    gen->add_option("--first-index", first_index, "Index of the first utterance (disjoint splits)");

    // acoustics
    auto* ac = app.add_subcommand("acoustics", "Frame classifier");
    ac->require_subcommand(1);
    auto* ac_train = ac->add_subcommand("train", "Train on <dir>/*.frames with matching .trn files");
    fs::path ac_data, ac_labels, ac_out;
    int radius = 1;
    frame_training_options fopt;
    ac_train->add_option("--data", ac_data, "Directory of .frames and .trn files")->required();
    ac_train->add_option("--labels", ac_labels, "Label list (default <data>/labels)");
    ac_train->add_option("--out", ac_out, "Classifier file")->required();
    ac_train->add_option("--radius", radius, "Context frames on each side")->capture_default_str();
    ac_train->add_option("--epochs", fopt.epochs)->capture_default_str();
    ac_train->add_option("--step-size", fopt.step_size)->capture_default_str();
    ac_train->add_flag("--subsample", fopt.subsample, "Alternate even and odd frame subsampling per epoch");

    auto* ac_classify = ac->add_subcommand("classify", "Write log-posteriors for .frames files");
    fs::path cl_model, cl_in, cl_out;
    std::string parity = "none";
    ac_classify->add_option("--model", cl_model, "Classifier file")->required();
    ac_classify->add_option("--in", cl_in, "A .frames file or a directory of them")->required();
    ac_classify->add_option("--out", cl_out, "Output directory")->required();
    ac_classify->add_option("--subsample", parity, "Frames to evaluate")
        ->check(CLI::IsMember({ "none", "even", "odd" }))
        ->capture_default_str();

    // prune
    auto* pr = app.add_subcommand("prune", "Prune a weighted lattice");
    std::string method;
    prune_params pp;
    fs::path pr_in, pr_out;
    pr->add_option("--method", method)->required()->check(CLI::IsMember({ "beam", "edge", "vertex" }));
    pr->add_option("--alpha", pp.alpha)->required();
    pr->add_option("--in", pr_in, "Input lattice")->required();
    pr->add_option("--out", pr_out, "Output lattice")->required();

    // train
    auto* tr = app.add_subcommand("train", "Train one segmental model");
    fs::path tr_config, tr_lattices, tr_posteriors, tr_gold, tr_dev, tr_model, tr_log, tr_lm;
    tr->add_option("--pass-config", tr_config)->required();
    tr->add_option("--lattices", tr_lattices, "Directory of <id>.lat (dense spaces when omitted)");
    tr->add_option("--posteriors", tr_posteriors, "Directory of <id>.post")->required();
    tr->add_option("--gold", tr_gold, "Training transcriptions")->required();
    tr->add_option("--dev", tr_dev, "Development transcriptions");
    tr->add_option("--out-model", tr_model)->required();
    tr->add_option("--log", tr_log, "Tab-separated per-epoch log (appended)");
    tr->add_option("--out-lm", tr_lm, "Where to write the estimated bigram LM");

    // eval
    auto* ev = app.add_subcommand("eval", "Per-utterance and corpus error report");
    fs::path ev_model, ev_posteriors, ev_gold, ev_lattices, ev_lm;
    double frame_shift = 0.01;
    ev->add_option("--model", ev_model)->required();
    ev->add_option("--posteriors", ev_posteriors)->required();
    ev->add_option("--gold", ev_gold)->required();
    ev->add_option("--lattices", ev_lattices);
    ev->add_option("--lm", ev_lm);
    ev->add_option("--frame-shift", frame_shift, "Seconds per frame")->capture_default_str();

    // cascade
    auto* cas = app.add_subcommand("cascade", "Multi-pass training and decoding");
    cas->require_subcommand(1);
    auto* ct = cas->add_subcommand("train", "Train every pass on <data>/train, tune on <data>/dev");
    fs::path ct_config, ct_data, ct_out;
    ct->add_option("--config", ct_config)->required();
    ct->add_option("--data", ct_data)->required();
    ct->add_option("--out", ct_out, "Output directory (default <data>/cascade)");
    auto* cd = cas->add_subcommand("decode", "Decode posteriors (or frames) and report timings");
    fs::path cd_config, cd_models, cd_in, cd_out, cd_clf, cd_timing;
    cd->add_option("--config", cd_config)->required();
    cd->add_option("--models", cd_models)->required();
    cd->add_option("--in", cd_in, "A .post file or a directory of them")->required();
    cd->add_option("--out", cd_out, "Directory for hypothesis transcriptions");
    cd->add_option("--classifier", cd_clf, "Decode .frames, timing the classifier too");
    cd->add_option("--timing", cd_timing, "Timing table file (stdout when omitted)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            synth_generate(spec_file, synth_out, first_index);
        } else if (ac_train->parsed()) {
            acoustics_train(ac_data, ac_labels, ac_out, radius, fopt);
        } else if (ac_classify->parsed()) {
            acoustics_classify(cl_model, cl_in, cl_out, parse_parity(parity));
        } else if (pr->parsed()) {
            pp.method = parse_prune_method(method);
            pp.check();
            prune_command(pp, pr_in, pr_out);
        } else if (tr->parsed()) {
            train_command(tr_config, tr_lattices, tr_posteriors, tr_gold, tr_dev, tr_model, tr_log, tr_lm);
        } else if (ev->parsed()) {
            eval_command(ev_model, ev_posteriors, ev_gold, ev_lattices, ev_lm, frame_shift);
        } else if (ct->parsed()) {
            cascade_train(ct_config, ct_data, ct_out);
        } else if (cd->parsed()) {
            cascade_decode(cd_config, cd_models, cd_in, cd_out, cd_clf, cd_timing);
        }
    } catch (std::exception const& e) {
        std::cerr << "dsc: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
