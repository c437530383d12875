// voicegate/cli.hpp

// Copyright 2026  The voicegate Authors
//
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

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "voicegate/audio.hpp"
#include "voicegate/config.hpp"
#include "voicegate/error.hpp"
#include "voicegate/eval.hpp"
#include "voicegate/speaker.hpp"
#include "voicegate/util.hpp"

namespace voicegate::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitReject = 1;
inline constexpr int kExitError = 2;

inline constexpr const char *kDefaultConfigPath = "voicegate.conf";
inline constexpr std::uint64_t kDefaultCorpusSeed = 2026;
inline constexpr int kCorpusUtterances = 10;
inline constexpr int kCorpusEnrollUtterances = 5;

namespace detail {

inline std::string utterance_file(const std::string &speaker, int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "_%02d.wav", index + 1);
  return "wav/" + speaker + buf;
}

inline void write_text(const std::filesystem::path &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "short write to " + path.string());
}

/// Writes the default corpus: wav/<spk>_NN.wav, enroll.txt (one line per
/// speaker: id then its enrollment files) and manifest.txt (test trials).
inline int synth(const std::filesystem::path &out_dir, std::uint64_t seed, std::ostream &out) {
  std::filesystem::create_directories(out_dir / "wav");
  const auto corpus = synth_corpus(default_speaker_specs(), kCorpusUtterances, seed);

  std::string enroll_list;
  std::vector<ManifestEntry> manifest;
  for (const auto &[id, utts] : corpus) {
    enroll_list += id;
    for (int u = 0; u < static_cast<int>(utts.size()); ++u) {
      const std::string rel = utterance_file(id, u);
      save_wav(utts[static_cast<std::size_t>(u)], out_dir / rel);
      if (u < kCorpusEnrollUtterances) enroll_list += ' ' + rel;
    }
    enroll_list += '\n';
  }
  for (const auto &[id, utts] : corpus)
    for (int u = kCorpusEnrollUtterances; u < static_cast<int>(utts.size()); ++u)
      manifest.push_back({true, id, id, utterance_file(id, u)});
  for (const auto &[id, utts] : corpus)
    for (int u = kCorpusEnrollUtterances; u < static_cast<int>(utts.size()); ++u)
      for (const auto &[other, unused] : corpus)
        if (other != id) manifest.push_back({false, other, id, utterance_file(id, u)});

  write_text(out_dir / "enroll.txt", enroll_list);
  write_text(out_dir / "manifest.txt", format_manifest(manifest));
  out << "speakers=" << corpus.size() << '\n'
      << "utterances_per_speaker=" << kCorpusUtterances << '\n'
      << "enroll_per_speaker=" << kCorpusEnrollUtterances << '\n'
      << "seed=" << seed << '\n'
      << "enroll_list=enroll.txt\n"
      << "manifest=manifest.txt\n"
      << "trials=" << manifest.size() << '\n';
  return kExitOk;
}

}  // namespace detail

/// Runs one command. `args` excludes the program name. Exit codes: 0 success
/// or accept, 1 verification reject, 2 any error.
inline int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
  CLI::App app{"voicegate: voice-password enrollment and verification", "voicegate"};
  app.require_subcommand(1);

  std::string config_path;
  std::string registry_override;
  app.add_option("--config", config_path, "engine config file (default ./voicegate.conf)");
  app.add_option("--registry", registry_override, "registry directory override");

  std::string speaker_id;
  std::vector<std::string> wavs;
  auto *enroll_cmd = app.add_subcommand("enroll", "train a speaker profile from WAV utterances");
  enroll_cmd->add_option("id", speaker_id, "speaker id")->required();
  enroll_cmd->add_option("wavs", wavs, "enrollment utterances")->required();

  std::string wav;
  auto *verify_cmd = app.add_subcommand("verify", "accept or reject a claimed identity");
  verify_cmd->add_option("id", speaker_id, "claimed speaker id")->required();
  verify_cmd->add_option("wav", wav, "test utterance")->required();

  auto *identify_cmd = app.add_subcommand("identify", "rank all enrolled speakers");
  identify_cmd->add_option("wav", wav, "test utterance")->required();

  std::string manifest_path;
  std::optional<double> snr_db;
  std::uint64_t seed = kDefaultCorpusSeed;
  std::string format = "table";
  auto *eval_cmd = app.add_subcommand("eval", "score a trial manifest against the registry");
  eval_cmd->add_option("manifest", manifest_path, "trial manifest")->required();
  eval_cmd->add_option("--snr", snr_db, "add white noise to every trial at this SNR (dB)");
  eval_cmd->add_option("--seed", seed, "noise seed");
  eval_cmd->add_option("--format", format, "table or kv")->check(CLI::IsMember({"table", "kv"}));

  std::string out_dir;
  auto *synth_cmd = app.add_subcommand("synth", "write the synthetic corpus and its manifest");
  synth_cmd->add_option("out_dir", out_dir, "output directory")->required();
  synth_cmd->add_option("--seed", seed, "corpus seed");

  std::vector<std::string> argv_store;
  argv_store.reserve(args.size() + 1);
  argv_store.emplace_back("voicegate");
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char *> argv;
  for (const auto &a : argv_store) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError &e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return kExitOk;
    }
    const bool unknown = app.get_subcommands().empty() && !args.empty() &&
                         args.front().rfind("--", 0) != 0;
    err << "voicegate: " << (unknown ? "UnknownCommand: " : "BadArguments: ") << e.what() << '\n';
    return kExitError;
  }

  try {
    if (synth_cmd->parsed()) return detail::synth(out_dir, seed, out);

    EngineConfig cfg;
    if (!config_path.empty())
      cfg = load_config(config_path);
    else if (std::filesystem::exists(kDefaultConfigPath))
      cfg = load_config(kDefaultConfigPath);
    if (!registry_override.empty()) cfg.registry_dir = registry_override;

    if (enroll_cmd->parsed()) {
      std::vector<AudioSignal> utts;
      for (const auto &w : wavs) utts.push_back(load_wav(w));
      const SpeakerProfile p = enroll(speaker_id, utts, cfg.frontend, cfg.training,
                                        cfg.threshold_k, cfg.threshold_scoring);
      std::filesystem::create_directories(cfg.registry_dir);
      save_profile(p, profile_path(cfg.registry_dir, p.speaker_id));
      out << "speaker=" << p.speaker_id << '\n'
          << "profile=" << p.speaker_id << ".profile\n"
          << "n_utterances=" << p.enroll_stats.n_utterances << '\n'
          << "mean_score=" << format_exact(p.enroll_stats.mean_score) << '\n'
          << "std_score=" << format_exact(p.enroll_stats.std_score) << '\n'
          << "threshold=" << format_exact(p.threshold) << '\n';
      return kExitOk;
    }

    if (verify_cmd->parsed()) {
      if (!is_valid_speaker_id(speaker_id))
        throw Error(ErrorCode::BadArguments, "invalid speaker id '" + speaker_id + "'");
      const auto path = profile_path(cfg.registry_dir, speaker_id);
      if (!std::filesystem::exists(path))
        throw Error(ErrorCode::FileNotFound, "no profile for '" + speaker_id + "' in " +
                                                 cfg.registry_dir.string());
      const SpeakerProfile p = load_profile(path);
      const VerificationResult r = verify(p, load_wav(wav), cfg.frontend);
      out << "decision=" << (r.accepted ? "ACCEPT" : "REJECT") << '\n'
          << "speaker=" << p.speaker_id << '\n'
          << "score=" << format_exact(r.score) << '\n'
          << "threshold=" << format_exact(r.threshold) << '\n'
          << "margin=" << format_exact(r.margin) << '\n';
      return r.accepted ? kExitOk : kExitReject;
    }

    if (identify_cmd->parsed()) {
      const auto profiles = load_registry(cfg.registry_dir);
      const IdentificationResult r = identify(profiles, load_wav(wav), cfg.frontend);
      out << "best=" << r.best_speaker_id << '\n';
      for (std::size_t i = 0; i < r.ranked_scores.size(); ++i)
        out << "rank." << i + 1 << '=' << r.ranked_scores[i].first << ' '
            << format_exact(r.ranked_scores[i].second) << '\n';
      return kExitOk;
    }

    if (eval_cmd->parsed()) {
      std::ifstream in(manifest_path);
      if (!in) throw Error(ErrorCode::FileNotFound, "manifest " + manifest_path);
      const auto entries = parse_manifest(in);
      const auto base = std::filesystem::path(manifest_path).parent_path();
      const TrialSet trials = load_trials(entries, base, snr_db, seed);
      const Metrics m = evaluate(load_registry(cfg.registry_dir), trials, cfg.frontend);
      out << (format == "kv" ? metrics_kv(m) : metrics_table(m));
      return kExitOk;
    }
  } catch (const Error &e) {
    err << "voicegate: " << e.what() << '\n';
    return kExitError;
  } catch (const std::exception &e) {
    err << "voicegate: " << e.what() << '\n';
    return kExitError;
  }
  err << "voicegate: UnknownCommand\n";
  return kExitError;
}

}  // namespace voicegate::cli
