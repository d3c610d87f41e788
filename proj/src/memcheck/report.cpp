#include "sealpy/memcheck/report.hpp"

#include <algorithm>

#include "json.hpp"

namespace sealpy::memcheck {

std::string emit_report(std::vector<diagnostic> diagnostics, const analysis_stats& stats, report_format format) {
    std::sort(diagnostics.begin(), diagnostics.end());
    if (format == report_format::json) {
        nlohmann::ordered_json findings = nlohmann::ordered_json::array();
        for (const auto& d : diagnostics) {
            findings.push_back({{"kind", std::string(to_string(d.kind))},
                                {"function", d.function},
                                {"instruction", d.instruction},
                                {"line", d.line},
                                {"message", d.message}});
        }
        nlohmann::ordered_json doc;
        doc["findings"] = std::move(findings);
        doc["stats"] = {{"functions", stats.functions}, {"iterations", stats.iterations}};
        return doc.dump(2) + "\n";
    }
    if (diagnostics.empty()) return "no findings\n";
    std::string out;
    for (const auto& d : diagnostics) {
        out += d.function + ":" + std::to_string(d.instruction) + " (line " + std::to_string(d.line) +
               "): " + std::string(to_string(d.kind)) + ": " + d.message + "\n";
    }
    out += std::to_string(diagnostics.size()) + (diagnostics.size() == 1 ? " finding\n" : " findings\n");
    return out;
}

} // namespace sealpy::memcheck
