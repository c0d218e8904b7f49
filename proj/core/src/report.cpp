#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "flowdrift/errors.hpp"
#include "flowdrift/protocol.hpp"
#include "report_json.hpp"

namespace flowdrift {

namespace fs = std::filesystem;

namespace {

std::string pct(double v) {
  if (std::isnan(v)) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v * 100.0);
  return buf;
}

std::string pct(const std::optional<double>& v) {
  return v ? pct(*v) : "n/a";
}

std::string secs(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::string pad(const std::string& s, std::size_t width) {
  if (s.size() >= width) return s + "  ";
  return s + std::string(width - s.size() + 2, ' ');
}

void metric_row(std::ostringstream& out, const std::string& c0,
                const std::string& c1, const EvalSnapshot& s) {
  out << pad(c0, 12) << pad(c1, 24) << pad(pct(s.accuracy), 8)
      << pad(pct(s.f1), 8) << pad(pct(s.precision), 9)
      << pad(pct(s.recall), 8) << pad(pct(s.auroc), 8) << "\n";
}

const EvalSnapshot* final_incoming_snapshot(const IncrementalResult& inc) {
  const EvalSnapshot* last = nullptr;
  for (const EvalSnapshot& s : inc.snapshots) {
    if (s.test_set_id == ProtocolRunner::kIncomingTestId &&
        (!last || s.batch_index > last->batch_index)) {
      last = &s;
    }
  }
  return last;
}

double final_value(const std::vector<double>& v) {
  return v.empty() ? std::numeric_limits<double>::quiet_NaN() : v.back();
}

}  // namespace

std::string render_stats(const DatasetStats& stats,
                         const std::string& title) {
  std::ostringstream out;
  out << "== " << title << " ==\n";
  out << pad("origin", 10) << pad("attack_type", 16) << "flows\n";
  for (const auto& [key, count] : stats.by_origin_attack) {
    out << pad(key.first.empty() ? "-" : key.first, 10)
        << pad(key.second, 16) << count << "\n";
  }
  out << "benign total: " << stats.benign
      << "   malicious total: " << stats.malicious << "\n";
  return out.str();
}

std::string render_tables(const ExperimentReport& report) {
  std::ostringstream out;

  out << render_stats(report.offline_stats, "Dataset statistics: offline source")
      << "\n";
  out << render_stats(report.incoming_stats,
                      "Dataset statistics: incoming source")
      << "\n";

  out << "== Split design ==\n";
  out << pad("source", 10) << pad("total", 9) << pad("train", 9)
      << "test\n";
  out << pad("offline", 10) << pad(std::to_string(report.splits.offline_total), 9)
      << pad(std::to_string(report.splits.offline_train), 9)
      << report.splits.offline_test << "\n";
  out << pad("incoming", 10)
      << pad(std::to_string(report.splits.incoming_total), 9)
      << pad(std::to_string(report.splits.incoming_train), 9)
      << report.splits.incoming_test << "\n";
  out << "incremental batches: " << report.splits.batch_count
      << " (batch size " << report.config.batch_size << ")\n\n";

  out << "== Offline model on both test sets (before incremental learning) ==\n";
  out << pad("model", 12) << pad("test set", 24) << pad("acc", 8)
      << pad("f1", 8) << pad("prec", 9) << pad("recall", 8) << pad("auroc", 8)
      << "\n";
  metric_row(out, report.config.model, "offline_test",
             report.offline_eval_offline_test);
  metric_row(out, report.config.model, "incoming_test",
             report.offline_eval_incoming_test);
  out << "\n";

  auto incremental_block = [&](const IncrementalResult& inc,
                               const std::string& model_label) {
    out << "== Incoming test set before vs after incremental learning ("
        << model_label << ") ==\n";
    out << pad("model", 12) << pad("phase", 24) << pad("acc", 8)
        << pad("f1", 8) << pad("prec", 9) << pad("recall", 8)
        << pad("auroc", 8) << "\n";
    metric_row(out, model_label, "before IL", report.offline_eval_incoming_test);
    if (const EvalSnapshot* last = final_incoming_snapshot(inc)) {
      metric_row(out, model_label,
                 "after IL (batch " + std::to_string(last->batch_index) + ")",
                 *last);
    }
    out << "batches run: " << inc.batches_run
        << "   samples consumed: " << inc.samples_consumed
        << (inc.early_stopped ? "   early-stopped" : "") << "\n";
    out << "final forgetting rate: " << pct(final_value(inc.curve.forgetting))
        << "\n\n";
  };

  if (report.incremental) {
    incremental_block(*report.incremental, report.config.model);
  }

  if (report.lwf) {
    incremental_block(report.lwf->plain, "mlp");
    incremental_block(report.lwf->lwf, "mlp_lwf");

    out << "== DNN with and without LwF under incremental learning ==\n";
    out << pad("metric", 30) << pad("without LwF", 13) << "with LwF\n";
    auto row = [&](const std::string& label, const std::string& a,
                   const std::string& b) {
      out << pad(label, 30) << pad(a, 13) << b << "\n";
    };
    row("offline testset before IL", pct(report.lwf->plain.curve.baseline_accuracy),
        pct(report.lwf->lwf.curve.baseline_accuracy));
    row("offline testset after IL",
        pct(final_value(report.lwf->plain.curve.offline_accuracy)),
        pct(final_value(report.lwf->lwf.curve.offline_accuracy)));
    row("incoming testset before IL",
        pct(report.offline_eval_incoming_test.accuracy),
        pct(report.offline_eval_incoming_test.accuracy));
    row("incoming testset after IL",
        pct(final_value(report.lwf->plain.curve.incoming_accuracy)),
        pct(final_value(report.lwf->lwf.curve.incoming_accuracy)));
    row("forgetting rate", pct(final_value(report.lwf->plain.curve.forgetting)),
        pct(final_value(report.lwf->lwf.curve.forgetting)));
    row("offline training time (s)", secs(report.timing.offline_train_seconds),
        secs(report.timing.offline_train_seconds));
    row("incremental time (s)", secs(report.timing.incremental_seconds),
        secs(report.timing.lwf_incremental_seconds.value_or(0.0)));
    out << "\n";
  }

  out << "== Time cost ==\n";
  out << "offline training: " << secs(report.timing.offline_train_seconds)
      << " s\n";
  out << "mean incremental update per batch: "
      << secs(report.timing.per_batch_mean_seconds) << " s\n";
  if (report.timing.lwf_per_batch_mean_seconds) {
    out << "mean lwf update per batch: "
        << secs(*report.timing.lwf_per_batch_mean_seconds) << " s\n";
  }
  return out.str();
}

void emit_reports(const ExperimentReport& report, const std::string& dir) {
  fs::create_directories(dir);
  fs::path base(dir);

  detail::ordered_json j;
  j["config"] = detail::config_to_json(report.config);
  j["dataset_stats"] = {{"offline", detail::stats_to_json(report.offline_stats)},
                        {"incoming", detail::stats_to_json(report.incoming_stats)}};
  j["splits"] = {{"offline_total", report.splits.offline_total},
                 {"offline_train", report.splits.offline_train},
                 {"offline_test", report.splits.offline_test},
                 {"incoming_total", report.splits.incoming_total},
                 {"incoming_train", report.splits.incoming_train},
                 {"incoming_test", report.splits.incoming_test},
                 {"batch_count", report.splits.batch_count}};
  j["offline_train"] = {{"samples_seen", report.offline_train.samples_seen},
                        {"epochs", report.offline_train.epochs},
                        {"final_loss", report.offline_train.final_loss}};
  j["offline_eval"] = {
      {"offline_test",
       detail::snapshot_to_json(report.offline_eval_offline_test, false)},
      {"incoming_test",
       detail::snapshot_to_json(report.offline_eval_incoming_test, false)}};
  if (report.incremental) {
    j["incremental"] = detail::incremental_to_json(*report.incremental);
  }
  if (report.lwf) {
    j["lwf"] = {{"plain", detail::incremental_to_json(report.lwf->plain)},
                {"lwf", detail::incremental_to_json(report.lwf->lwf)}};
  }

  {
    std::ofstream out(base / "report.json", std::ios::binary);
    if (!out) throw SchemaError("cannot write report.json in " + dir);
    out << j.dump(2) << "\n";
  }

  {
    detail::ordered_json t;
    t["offline_train_seconds"] = report.timing.offline_train_seconds;
    t["incremental_seconds"] = report.timing.incremental_seconds;
    t["per_batch_mean_seconds"] = report.timing.per_batch_mean_seconds;
    t["lwf_incremental_seconds"] =
        report.timing.lwf_incremental_seconds
            ? detail::ordered_json(*report.timing.lwf_incremental_seconds)
            : detail::ordered_json(nullptr);
    t["lwf_per_batch_mean_seconds"] =
        report.timing.lwf_per_batch_mean_seconds
            ? detail::ordered_json(*report.timing.lwf_per_batch_mean_seconds)
            : detail::ordered_json(nullptr);
    std::ofstream out(base / "timing.json", std::ios::binary);
    out << t.dump(2) << "\n";
  }

  if (report.incremental) {
    write_curve_csv(report.incremental->curve,
                    (base / ("curve_" + report.config.model + ".csv")).string());
  }
  if (report.lwf) {
    write_curve_csv(report.lwf->plain.curve,
                    (base / "curve_mlp.csv").string());
    write_curve_csv(report.lwf->lwf.curve,
                    (base / "curve_mlp_lwf.csv").string());
  }

  {
    std::ofstream out(base / "tables.txt", std::ios::binary);
    out << render_tables(report);
  }
}

ExperimentReport load_report(const std::string& report_json_path,
                             const std::string& timing_json_path) {
  std::ifstream in(report_json_path);
  if (!in) throw SchemaError("cannot open report: " + report_json_path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(report_json_path + ": " + e.what());
  }

  ExperimentReport report;
  report.config = detail::config_from_json(j.at("config"));
  report.offline_stats =
      detail::stats_from_json(j.at("dataset_stats").at("offline"));
  report.incoming_stats =
      detail::stats_from_json(j.at("dataset_stats").at("incoming"));
  const auto& s = j.at("splits");
  report.splits.offline_total = s.at("offline_total").get<std::size_t>();
  report.splits.offline_train = s.at("offline_train").get<std::size_t>();
  report.splits.offline_test = s.at("offline_test").get<std::size_t>();
  report.splits.incoming_total = s.at("incoming_total").get<std::size_t>();
  report.splits.incoming_train = s.at("incoming_train").get<std::size_t>();
  report.splits.incoming_test = s.at("incoming_test").get<std::size_t>();
  report.splits.batch_count = s.at("batch_count").get<std::size_t>();
  report.offline_train.samples_seen =
      j.at("offline_train").at("samples_seen").get<std::size_t>();
  report.offline_train.epochs =
      j.at("offline_train").at("epochs").get<std::size_t>();
  report.offline_train.final_loss =
      j.at("offline_train").at("final_loss").get<double>();
  report.offline_eval_offline_test =
      detail::snapshot_from_json(j.at("offline_eval").at("offline_test"));
  report.offline_eval_incoming_test =
      detail::snapshot_from_json(j.at("offline_eval").at("incoming_test"));
  if (j.contains("incremental")) {
    report.incremental = detail::incremental_from_json(j.at("incremental"));
  }
  if (j.contains("lwf")) {
    LwfComparison cmp;
    cmp.plain = detail::incremental_from_json(j.at("lwf").at("plain"));
    cmp.lwf = detail::incremental_from_json(j.at("lwf").at("lwf"));
    report.lwf = std::move(cmp);
  }

  if (!timing_json_path.empty() && fs::exists(timing_json_path)) {
    std::ifstream tin(timing_json_path);
    nlohmann::json t;
    tin >> t;
    report.timing.offline_train_seconds =
        t.at("offline_train_seconds").get<double>();
    report.timing.incremental_seconds =
        t.at("incremental_seconds").get<double>();
    report.timing.per_batch_mean_seconds =
        t.at("per_batch_mean_seconds").get<double>();
    if (!t.at("lwf_incremental_seconds").is_null()) {
      report.timing.lwf_incremental_seconds =
          t.at("lwf_incremental_seconds").get<double>();
    }
    if (!t.at("lwf_per_batch_mean_seconds").is_null()) {
      report.timing.lwf_per_batch_mean_seconds =
          t.at("lwf_per_batch_mean_seconds").get<double>();
    }
  }
  return report;
}

}  // namespace flowdrift
