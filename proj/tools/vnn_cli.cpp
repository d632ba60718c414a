// Copyright 2026 The vnn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// vnn: quantize, run, prove and verify quadratic-activation networks over Mersenne fields.

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "vnn/model_io.hpp"
#include "vnn/selftest.hpp"
#include "vnn/session.hpp"
#include "vnn/tcp.hpp"

namespace {

using namespace vnn;
using io::Json;
using Clock = std::chrono::steady_clock;

enum Exit { kOk = 0, kReject = 1, kUsage = 2, kIo = 3, kRange = 4 };

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Options {
  std::string model, input, out, out_input, transcript, result, listen, connect;
  std::string prime = "m61", mode = "fs", rule = "cumulative", shapes;
  std::vector<double> alpha{16}, beta{16};
  std::uint64_t seed = 0;
  std::size_t batch = 1;
  int trials = 20;
  bool float_input = false, no_range_check = false;
};

std::vector<std::uint8_t> read_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::ios_base::failure("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_binary(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  io::write_text_file(path, std::string(bytes.begin(), bytes.end()));
}

ChallengeMode parse_mode(const std::string& s) {
  if (s == "fs") return ChallengeMode::kFiatShamir;
  if (s == "interactive") return ChallengeMode::kInteractive;
  throw CLI::ValidationError("--mode", "expected fs or interactive");
}

ModulusId parse_prime(const std::string& s) {
  try {
    return io::parse_modulus(s);
  } catch (const FormatError&) {
    throw CLI::ValidationError("--prime", "expected m61 or m127");
  }
}

// ---------------------------------------------------------------------------
// quantize

std::string scientific(const BigInt& v) {
  std::ostringstream os;
  os << std::setprecision(2) << std::scientific << v.convert_to<double>();
  return os.str();
}

int cmd_quantize(const Options& o) {
  const auto fm = io::float_model_from_json(io::read_json_file(o.model));
  const auto calib = io::float_batch_from_json(io::read_json_file(o.input));
  const ModulusId modulus = parse_prime(o.prime);
  const BiasScaleRule rule = o.rule == "closed-form" ? BiasScaleRule::kClosedForm : BiasScaleRule::kCumulative;

  if (o.alpha.size() > 1 || o.beta.size() > 1) {
    // grid of maximum magnitudes, rows beta and columns alpha; '*' marks overflow
    std::cout << "max |value| by beta (rows) and alpha (columns); * exceeds (p-1)/2 = " << scientific(signed_limit(modulus))
              << "\n" << std::setw(10) << "beta\\alpha";
    for (double a : o.alpha) std::cout << std::setw(12) << a;
    std::cout << "\n";
    for (double b : o.beta) {
      std::cout << std::setw(10) << b;
      for (double a : o.alpha) {
        const auto rep = max_value_report(fm, a, b, modulus, calib, rule);
        std::cout << std::setw(11) << scientific(rep.max_value) << (rep.feasible() ? ' ' : '*');
      }
      std::cout << "\n";
    }
    return kOk;
  }

  if (o.out.empty()) throw CLI::ValidationError("--out", "required unless sweeping alpha/beta");
  const auto q = quantize_model(fm, o.alpha[0], o.beta[0], modulus, calib, rule);
  io::write_text_file(o.out, io::to_json(q.model).dump() + "\n");
  if (!o.out_input.empty())
    io::write_text_file(o.out_input, io::to_json(quantize_input(calib, o.alpha[0], modulus)).dump() + "\n");
  const auto& r = q.report;
  std::cout << "alpha " << r.alpha << " beta " << r.beta << " modulus " << modulus_name(modulus) << "\n"
            << "input max " << r.input << "\n";
  for (std::size_t k = 0; k < r.layers.size(); ++k)
    std::cout << "layer " << k << ": weight " << r.layers[k].weight << " bias " << r.layers[k].bias << " z "
              << r.layers[k].z << " z^2 " << r.layers[k].y << "\n";
  std::cout << "max value " << r.max_value << " <= (p-1)/2 = " << r.limit << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------
// field-model commands

template <PrimeField F>
struct Loaded {
  FieldModel<F> model;  // padded
  Matrix<F> x;          // padded
  std::vector<std::size_t> original_dims;
  std::size_t samples = 0;
};

template <PrimeField F>
Loaded<F> load(const Options& o, const SignedModel& sm) {
  Loaded<F> l;
  const auto fm = FieldModel<F>::from_signed(sm);
  l.original_dims = fm.original_dims;
  l.model = pad_to_pow2(fm);
  const Json xj = io::read_json_file(o.input);
  const Matrix<SignedInt> xs = o.float_input ? quantize_input(io::float_batch_from_json(xj), sm.alpha, sm.modulus)
                                             : io::signed_batch_from_json(xj);
  if (xs.rows() != fm.input_dim())
    throw ShapeMismatch("input has " + std::to_string(xs.rows()) + " rows, model expects " + std::to_string(fm.input_dim()));
  const SignedInt bound = signed_bound<F>();
  for (SignedInt v : xs.values())
    if (v > bound || v < -bound) throw OutOfRange("input value exceeds (p-1)/2");
  l.samples = xs.cols();
  l.x = pad_batch(encode_matrix<F>(xs));
  return l;
}

template <PrimeField F>
Json output_json(const Loaded<F>& l, const Matrix<F>& z_last) {
  const auto pred = decode_output(z_last, output_scale(l.model.alpha, l.model.beta, l.model.num_layers()),
                                  l.original_dims.back(), l.samples);
  return {{"p", std::string(modulus_name(F::kId))},
          {"z_last", io::to_json(decode_matrix(z_last))},
          {"classes", l.original_dims.back()},
          {"samples", l.samples},
          {"argmax", pred.argmax},
          {"probabilities", io::to_json(pred.probabilities)}};
}

template <PrimeField F>
int cmd_infer(const Options& o, const SignedModel& sm) {
  const auto l = load<F>(o, sm);
  const auto t0 = Clock::now();
  const auto trace = forward_infer(l.model, l.x);
  const double secs = seconds_since(t0);
  if (!o.no_range_check) audit_trace_range(l.model, trace);
  Json out = output_json(l, trace.output());
  out["inference_seconds"] = secs;
  if (!o.out.empty()) io::write_text_file(o.out, out.dump() + "\n");
  std::cout << "predictions:";
  for (auto c : out["argmax"]) std::cout << ' ' << c;
  std::cout << "\ninference " << secs << " s\n";
  return kOk;
}

template <PrimeField F>
int cmd_prove(const Options& o, const SignedModel& sm) {
  if (o.transcript.empty() || o.out.empty()) throw CLI::ValidationError("prove", "--transcript and --out are required");
  const auto l = load<F>(o, sm);
  const ChallengeMode mode = parse_mode(o.mode);
  const auto t0 = Clock::now();
  const auto trace = forward_infer(l.model, l.x);
  const double infer_secs = seconds_since(t0);
  if (!o.no_range_check) audit_trace_range(l.model, trace);
  const auto t1 = Clock::now();
  const auto transcript = prove_trace(l.model, trace, mode, o.seed);
  const double prove_secs = seconds_since(t1);
  const auto bytes = transcript.serialize();
  write_binary(o.transcript, bytes);
  Json out = output_json(l, trace.output());
  out["inference_seconds"] = infer_secs;
  out["prove_seconds"] = prove_secs;
  io::write_text_file(o.out, out.dump() + "\n");
  std::cout << "inference " << infer_secs << " s\n"
            << "proof generation " << prove_secs << " s (overhead ratio " << prove_secs / infer_secs << ")\n"
            << "transcript " << bytes.size() << " bytes\n";
  return kOk;
}

template <PrimeField F>
int cmd_verify(const Options& o, const SignedModel& sm) {
  if (o.transcript.empty() || o.result.empty()) throw CLI::ValidationError("verify", "--transcript and --result are required");
  const auto l = load<F>(o, sm);
  const Json result = io::read_json_file(o.result);
  Matrix<F> z_last;
  try {
    z_last = encode_matrix<F>(io::signed_batch_from_json(result.at("z_last")));
  } catch (const Json::exception& e) {
    throw FormatError(std::string("result file: ") + e.what());
  }
  const auto bytes = read_binary(o.transcript);
  std::cout << "transcript " << bytes.size() << " bytes\n";
  const auto t0 = Clock::now();
  VerifyResult res;
  if (z_last.rows() != l.model.output_dim() || z_last.cols() != l.x.cols()) {
    res = VerifyResult::reject(RejectPhase::kMalformed, "claimed output has the wrong shape");
  } else {
    try {
      res = verify(l.model, l.x, z_last, ProofTranscript::parse(bytes), o.seed);
    } catch (const MalformedTranscript& e) {
      res = VerifyResult::reject(RejectPhase::kMalformed, e.what());
    }
  }
  const double secs = seconds_since(t0);
  std::cout << "verification " << secs << " s\n";
  if (result.contains("inference_seconds") && result.contains("prove_seconds")) {
    const double prover = result["inference_seconds"].get<double>() + result["prove_seconds"].get<double>();
    std::cout << "prover (inference + proof) " << prover << " s, verifier/prover ratio " << secs / prover << "\n";
  }
  if (res.accepted) {
    std::cout << "ACCEPT\n";
    return kOk;
  }
  std::cout << "REJECT: " << to_string(res.phase) << " (" << res.reason << ")\n";
  return kReject;
}

template <PrimeField F>
int cmd_demo(const Options& o, const SignedModel& sm) {
  const auto l = load<F>(o, sm);
  if (!o.listen.empty()) {
    tcp::Listener listener(o.listen);
    std::cout << "verifier listening on port " << listener.port() << std::endl;
    tcp::FramedStream stream(listener.accept());
    const auto source = o.seed != 0 ? ChallengeSource::interactive(o.seed)
                                    : ChallengeSource::interactive(std::random_device{}());
    const auto t0 = Clock::now();
    const auto v = tcp::verify_remote<F>(stream, l.model, l.x, source);
    std::cout << "verification " << seconds_since(t0) << " s, " << stream.bytes_sent() + stream.bytes_received()
              << " bytes exchanged\n";
    if (v.result.accepted) {
      std::cout << "ACCEPT\n";
      return kOk;
    }
    std::cout << "REJECT: " << to_string(v.result.phase) << " (" << v.result.reason << ")\n";
    return kReject;
  }
  tcp::FramedStream stream(tcp::connect(o.connect));
  const auto trace = forward_infer(l.model, l.x);
  if (!o.no_range_check) audit_trace_range(l.model, trace);
  const auto v = tcp::prove_remote<F>(stream, l.model, trace);
  std::cout << "verifier says " << (v.accepted ? "ACCEPT" : "REJECT: " + std::string(to_string(v.phase))) << "\n";
  return v.accepted ? kOk : kReject;
}

template <class Fn>
int with_field_model(const Options& o, Fn&& fn) {
  const Json j = io::read_json_file(o.model);
  if (!io::is_field_model(j)) throw FormatError(o.model + " is not a field model; run quantize first");
  const auto sm = io::signed_model_from_json(j);
  spdlog::debug("model {} with {} layers", modulus_name(sm.modulus), sm.layers.size());
  return sm.modulus == ModulusId::kM61 ? fn(Fp61{}, sm) : fn(Fp127{}, sm);
}

// ---------------------------------------------------------------------------

int cmd_bound(const Options& o) {
  std::vector<std::size_t> dims;
  std::stringstream ss(o.shapes);
  for (std::string tok; std::getline(ss, tok, ',');) dims.push_back(std::stoul(tok));
  if (dims.empty()) throw CLI::ValidationError("--shapes", "need at least one width");
  const ModulusId modulus = parse_prime(o.prime);
  const Rational eps = soundness_bound(dims, o.batch, modulus);
  std::cout << "epsilon = " << eps << "\n"
            << "epsilon ~ " << std::setprecision(4) << eps.convert_to<double>() << "\n"
            << "< 2^-30: " << (below_pow2(eps, 30) ? "yes" : "no") << "\n";
  if (dims.size() >= 2) {
    ProofShape shape{{}, std::vector<bool>(dims.size() - 1, true), next_pow2(o.batch), modulus};
    for (std::size_t n : dims) shape.dims.push_back(next_pow2(n));
    std::cout << "transcript bytes (padded, all layers biased) = " << expected_transcript_bytes(shape) << "\n";
  }
  return kOk;
}

void configure_logging() {
  auto logger = spdlog::stderr_color_mt("vnn");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("SAFETYNETS_LOG")) spdlog::set_level(spdlog::level::from_str(env));
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();
  Options o;
  CLI::App app{"Verifiable inference for quadratic-activation networks"};
  app.require_subcommand(1);

  auto add_field_opts = [&](CLI::App* c) {
    c->add_option("--model", o.model, "field model JSON")->required()->check(CLI::ExistingFile);
    c->add_option("--input", o.input, "input batch JSON, features x samples")->required()->check(CLI::ExistingFile);
    c->add_flag("--float-input", o.float_input, "input holds reals; quantize with the model's alpha");
    c->add_flag("--no-range-check", o.no_range_check, "skip the wraparound audit of the trace");
  };

  auto* quantize = app.add_subcommand("quantize", "float model to field model, or an (alpha, beta) sweep");
  quantize->add_option("--model", o.model, "float model JSON")->required()->check(CLI::ExistingFile);
  quantize->add_option("--input", o.input, "calibration batch JSON")->required()->check(CLI::ExistingFile);
  quantize->add_option("--alpha", o.alpha, "input scale; a comma list sweeps")->delimiter(',');
  quantize->add_option("--beta", o.beta, "weight scale; a comma list sweeps")->delimiter(',');
  quantize->add_option("--prime", o.prime, "m61 or m127");
  quantize->add_option("--rule", o.rule, "bias scale rule")->check(CLI::IsMember({"cumulative", "closed-form"}));
  quantize->add_option("--out", o.out, "field model output");
  quantize->add_option("--out-input", o.out_input, "quantized calibration batch output");

  auto* infer = app.add_subcommand("infer", "run a field model");
  add_field_opts(infer);
  infer->add_option("--out", o.out, "output JSON with z_last and predictions");

  auto* prove_cmd = app.add_subcommand("prove", "run a field model and prove the result");
  add_field_opts(prove_cmd);
  prove_cmd->add_option("--transcript", o.transcript, "transcript output")->required();
  prove_cmd->add_option("--out", o.out, "result JSON (z_last, timings)")->required();
  prove_cmd->add_option("--mode", o.mode, "fs or interactive")->check(CLI::IsMember({"fs", "interactive"}));
  prove_cmd->add_option("--seed", o.seed, "verifier randomness seed (interactive mode)");

  auto* verify_cmd = app.add_subcommand("verify", "check a transcript against model, input and claimed output");
  add_field_opts(verify_cmd);
  verify_cmd->add_option("--transcript", o.transcript, "transcript file")->required()->check(CLI::ExistingFile);
  verify_cmd->add_option("--result", o.result, "result JSON written by prove")->required()->check(CLI::ExistingFile);
  verify_cmd->add_option("--seed", o.seed, "verifier randomness seed (interactive mode)");

  auto* bound = app.add_subcommand("bound", "soundness error 3 b (n_0 + ... + n_L) / p");
  bound->add_option("--shapes", o.shapes, "comma-separated widths n_0..n_L")->required();
  bound->add_option("--batch", o.batch, "batch size b")->check(CLI::PositiveNumber);
  bound->add_option("--prime", o.prime, "m61 or m127");

  auto* selftest_cmd = app.add_subcommand("selftest", "protocol checks on random toy networks");
  selftest_cmd->add_option("--trials", o.trials, "networks per check")->check(CLI::PositiveNumber);
  selftest_cmd->add_option("--seed", o.seed, "RNG seed");

  auto* demo = app.add_subcommand("demo", "interactive proof over TCP: --listen runs the verifier, --connect the prover");
  add_field_opts(demo);
  auto* listen = demo->add_option("--listen", o.listen, "host:port to accept the prover on");
  auto* connect = demo->add_option("--connect", o.connect, "host:port of the verifier");
  listen->excludes(connect);
  demo->add_option("--seed", o.seed, "verifier randomness seed (0 draws from the OS)");

  try {
    app.parse(argc, argv);
    if (demo->parsed() && o.listen.empty() && o.connect.empty())
      throw CLI::ValidationError("demo", "give --listen or --connect");
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (quantize->parsed()) return cmd_quantize(o);
    if (bound->parsed()) return cmd_bound(o);
    if (selftest_cmd->parsed()) return selftest::run(std::cout, o.seed, o.trials) ? kOk : kReject;
    return with_field_model(o, [&]<class F>(F, const SignedModel& sm) {
      if (infer->parsed()) return cmd_infer<F>(o, sm);
      if (prove_cmd->parsed()) return cmd_prove<F>(o, sm);
      if (verify_cmd->parsed()) return cmd_verify<F>(o, sm);
      return cmd_demo<F>(o, sm);
    });
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const Overflow& e) {
    std::cerr << "overflow: " << e.what() << "\n";
    return kRange;
  } catch (const OutOfRange& e) {
    std::cerr << "out of range: " << e.what() << "\n";
    return kRange;
  } catch (const DimensionMismatch& e) {
    std::cerr << "shape error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::ios_base::failure& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kIo;
  } catch (const FormatError& e) {
    std::cerr << "bad input file: " << e.what() << "\n";
    return kIo;
  } catch (const ChannelClosed& e) {
    std::cerr << "connection error: " << e.what() << "\n";
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  }
}
