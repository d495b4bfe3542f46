#include "studyroute/evaluation.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>
#include <sstream>

#include "studyroute/errors.hpp"

namespace studyroute {

void minor_error_table::add_pair(std::string true_class, std::string predicted_as) {
    pairs_[std::move(true_class)].insert(std::move(predicted_as));
}

bool minor_error_table::is_minor(const std::string& true_class,
                                 const std::string& predicted_as) const {
    auto it = pairs_.find(true_class);
    return it != pairs_.end() && it->second.count(predicted_as) > 0;
}

std::size_t minor_error_table::pair_count() const {
    std::size_t n = 0;
    for (const auto& [t, targets] : pairs_) n += targets.size();
    return n;
}

minor_error_table load_minor_error_table(const std::filesystem::path& path,
                                         const mapping_database* db) {
    std::ifstream in(path);
    if (!in) throw load_error("minor-error table: cannot open '" + path.string() + "'");

    minor_error_table table;
    std::string line;
    int row = 0;
    auto check = [&](const std::string& id) {
        if (db && !db->contains(id))
            throw load_error("minor-error table: row " + std::to_string(row) +
                             ": unknown class '" + id + "'");
    };
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::size_t tab = line.find('\t');
        if (tab == std::string::npos)
            throw load_error("minor-error table: row " + std::to_string(row) +
                             ": expected 'true<TAB>targets'");
        std::string true_class = line.substr(0, tab);
        check(true_class);
        std::stringstream targets(line.substr(tab + 1));
        std::string target;
        bool any = false;
        while (std::getline(targets, target, '|')) {
            if (target.empty()) continue;
            check(target);
            table.add_pair(true_class, target);
            any = true;
        }
        if (!any)
            throw load_error("minor-error table: row " + std::to_string(row) + ": no targets");
    }
    return table;
}

std::string_view grade_name(grade_kind g) {
    switch (g) {
        case grade_kind::correct: return "Correct";
        case grade_kind::minor: return "Minor";
        case grade_kind::major: return "Major";
        case grade_kind::no_prediction: return "NoPrediction";
    }
    return "NoPrediction";
}

grade_kind grade(const decision& dec, const ground_truth& truth, const minor_error_table& table,
                 const mapping_database& db) {
    if (truth.labels.empty()) throw parameter_error("grade: empty truth label set");
    for (const auto& label : truth.labels)
        if (!db.contains(label)) throw registry_error("grade: unknown truth class '" + label + "'");
    if (!dec.prediction) return grade_kind::no_prediction;
    if (!db.contains(*dec.prediction))
        throw registry_error("grade: unknown predicted class '" + *dec.prediction + "'");

    if (std::find(truth.labels.begin(), truth.labels.end(), *dec.prediction) !=
        truth.labels.end())
        return grade_kind::correct;
    for (const auto& label : truth.labels)
        if (table.is_minor(label, *dec.prediction)) return grade_kind::minor;
    return grade_kind::major;
}

eval_report aggregate(std::span<const std::pair<decision, grade_kind>> grades) {
    eval_report report;
    report.total = static_cast<long>(grades.size());
    long network_decided = 0;
    for (const auto& [dec, g] : grades) {
        switch (g) {
            case grade_kind::correct: ++report.correct; break;
            case grade_kind::minor: ++report.minor; break;
            case grade_kind::major: ++report.major; break;
            case grade_kind::no_prediction: break;
        }
        if (g != grade_kind::no_prediction) {
            ++report.predicted;
            report.layer_histogram[dec.deciding_layer] += 1;
            if (dec.deciding_layer == layer_kind::network_vote ||
                dec.deciding_layer == layer_kind::merged_meta_network_vote)
                ++network_decided;
        }
    }
    if (report.total > 0) {
        double total = static_cast<double>(report.total);
        report.predictive_power = report.predicted / total;
        report.accuracy = report.correct / total;
        report.minor_rate = report.minor / total;
        report.major_rate = report.major / total;
    }
    if (report.predicted > 0) {
        report.network_contribution =
            static_cast<double>(network_decided) / static_cast<double>(report.predicted);
        report.accuracy_over_predicted =
            static_cast<double>(report.correct) / static_cast<double>(report.predicted);
    }
    return report;
}

std::vector<ground_truth> load_ground_truth(const std::filesystem::path& path,
                                            const mapping_database* db) {
    std::ifstream in(path);
    if (!in) throw load_error("ground truth: cannot open '" + path.string() + "'");

    std::vector<ground_truth> out;
    std::string line;
    int row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::size_t comma = line.find(',');
        if (comma == std::string::npos)
            throw load_error("ground truth: row " + std::to_string(row) +
                             ": expected 'study_uid,label1|label2'");
        ground_truth truth;
        truth.study_uid = line.substr(0, comma);
        std::stringstream labels(line.substr(comma + 1));
        std::string label;
        while (std::getline(labels, label, '|')) {
            if (label.empty()) continue;
            if (db && !db->contains(label))
                throw load_error("ground truth: row " + std::to_string(row) +
                                 ": unknown class '" + label + "'");
            truth.labels.push_back(label);
        }
        if (truth.labels.empty())
            throw load_error("ground truth: row " + std::to_string(row) + ": no labels");
        out.push_back(std::move(truth));
    }
    return out;
}

void write_report(std::ostream& os, const eval_report& report) {
    os << "total = " << report.total << "\n";
    os << "predicted = " << report.predicted << "\n";
    os << "correct = " << report.correct << "\n";
    os << "minor = " << report.minor << "\n";
    os << "major = " << report.major << "\n";
    os << "predictive_power = " << report.predictive_power << "\n";
    os << "accuracy = " << report.accuracy << "\n";
    os << "accuracy_over_predicted = " << report.accuracy_over_predicted << "\n";
    os << "minor_rate = " << report.minor_rate << "\n";
    os << "major_rate = " << report.major_rate << "\n";
    os << "network_contribution = " << report.network_contribution << "\n";
    for (const auto& [layer, count] : report.layer_histogram)
        os << "decided_by." << layer_name(layer) << " = " << count << "\n";
}

}  // namespace studyroute
