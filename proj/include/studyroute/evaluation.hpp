#ifndef STUDYROUTE_EVALUATION_HPP
#define STUDYROUTE_EVALUATION_HPP

#include <filesystem>
#include <iosfwd>
#include <map>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "studyroute/core.hpp"
#include "studyroute/mapping_db.hpp"

namespace studyroute {

/// Reference labels for one study. Studies that can reasonably be read as
/// several types carry several labels; the set is never empty.
struct ground_truth {
    std::string study_uid;
    std::vector<std::string> labels;
};

/// Directed pairs (true class -> acceptable misclassification). A pair in
/// one direction says nothing about the reverse.
class minor_error_table {
public:
    void add_pair(std::string true_class, std::string predicted_as);
    bool is_minor(const std::string& true_class, const std::string& predicted_as) const;
    std::size_t pair_count() const;
    const std::map<std::string, std::set<std::string>>& pairs() const { return pairs_; }

private:
    std::map<std::string, std::set<std::string>> pairs_;
};

/// Load a minor-error table: TSV rows "true_class_id<TAB>target1|target2",
/// '#' comments. When a database is given, every id must exist in it.
minor_error_table load_minor_error_table(const std::filesystem::path& path,
                                         const mapping_database* db = nullptr);

enum class grade_kind { correct, minor, major, no_prediction };

std::string_view grade_name(grade_kind g);

/// Grade one decision: Correct when the prediction is among the truth
/// labels, Minor when some truth label lists the prediction as an
/// acceptable misclassification, Major otherwise. Unknown class ids raise
/// registry_error.
grade_kind grade(const decision& dec, const ground_truth& truth, const minor_error_table& table,
                 const mapping_database& db);

/// The aggregate metrics of one evaluation run. accuracy and the error
/// rates are over all studies; network_contribution is the share of
/// predictions decided by a network-bearing layer.
struct eval_report {
    long total = 0;
    long predicted = 0;
    long correct = 0;
    long minor = 0;
    long major = 0;
    double predictive_power = 0.0;
    double accuracy = 0.0;
    double minor_rate = 0.0;
    double major_rate = 0.0;
    double network_contribution = 0.0;
    double accuracy_over_predicted = 0.0;  ///< secondary ratio, see report output
    std::map<layer_kind, long> layer_histogram;
};

eval_report aggregate(std::span<const std::pair<decision, grade_kind>> grades);

/// Ground-truth file: CSV rows "study_uid,label1|label2|...". Labels are
/// validated against the database when one is given.
std::vector<ground_truth> load_ground_truth(const std::filesystem::path& path,
                                            const mapping_database* db = nullptr);

/// Human-readable report: every eval_report field plus the per-layer
/// decision histogram.
void write_report(std::ostream& os, const eval_report& report);

}  // namespace studyroute

#endif  // STUDYROUTE_EVALUATION_HPP
