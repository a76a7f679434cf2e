#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "zsfuse/embedding_store.hpp"
#include "zsfuse/method.hpp"

namespace zsfuse {

enum class SplitTag { closed, open };

struct ClassEntry {
    std::string name;
    std::string prompt;
    SplitTag split = SplitTag::closed;

    friend bool operator==(const ClassEntry&, const ClassEntry&) = default;
};

/// Ordered class list. The order is the column order of every score and
/// probability matrix computed against this catalog.
class ClassCatalog {
public:
    ClassCatalog() = default;
    explicit ClassCatalog(std::vector<ClassEntry> entries);

    /// Builds a catalog with default prompts ("A photo of <name>"), all closed.
    static ClassCatalog from_names(const std::vector<std::string>& names);

    std::size_t size() const noexcept { return entries_.size(); }
    const std::vector<ClassEntry>& entries() const noexcept { return entries_; }
    const ClassEntry& operator[](std::size_t i) const { return entries_.at(i); }
    std::optional<std::size_t> find(std::string_view name) const;
    std::size_t index_of(std::string_view name) const;  // throws validation error if absent
    std::vector<std::string> names() const;
    std::size_t closed_count() const noexcept;
    std::size_t open_count() const noexcept { return size() - closed_count(); }

    friend bool operator==(const ClassCatalog& a, const ClassCatalog& b) { return a.entries_ == b.entries_; }

private:
    std::vector<ClassEntry> entries_;
    std::map<std::string, std::size_t, std::less<>> index_;
};

std::string default_prompt(std::string_view class_name);

/// Reference-image rows per backbone, one index list per catalog class.
class ReferenceManifest {
public:
    using ClassLists = std::vector<std::vector<std::size_t>>;

    void set(const std::string& backbone, ClassLists per_class) { lists_[backbone] = std::move(per_class); }
    bool has(std::string_view backbone) const { return lists_.find(backbone) != lists_.end(); }
    const ClassLists& lists(std::string_view backbone) const;
    const std::map<std::string, ClassLists, std::less<>>& all() const noexcept { return lists_; }

    /// Reference count per class for one backbone (M_n).
    std::vector<std::size_t> counts(std::string_view backbone) const;

    friend bool operator==(const ReferenceManifest&, const ReferenceManifest&) = default;

private:
    std::map<std::string, ClassLists, std::less<>> lists_;
};

/// Everything the engine needs for one evaluation run.
struct DatasetBundle {
    ClassCatalog catalog;
    std::vector<std::size_t> labels;  // catalog index per test row
    std::optional<EmbeddingMatrix> text;
    std::map<std::string, EmbeddingMatrix, std::less<>> test;
    std::map<std::string, EmbeddingMatrix, std::less<>> references;
    ReferenceManifest reference_manifest;
    std::array<std::string, 3> method_backbone = {"clip", "clip", "dino"};
    nlohmann::ordered_json provenance = nlohmann::ordered_json::object();

    const std::string& backbone(Method m) const { return method_backbone[index_of(m)]; }
    std::size_t test_rows() const;

    /// Checks cross-file invariants for the given methods: equal test row
    /// counts, text rows == N, manifest indices in range and at least one
    /// reference per class for every image-image backbone.
    void validate(std::span<const Method> methods) const;
};

// JSON manifests. Relative file references resolve against the manifest's directory.
ClassCatalog catalog_from_json(const nlohmann::json& j);
nlohmann::ordered_json catalog_to_json(const ClassCatalog& c);
ClassCatalog load_catalog(const std::filesystem::path& path);
void save_catalog(const ClassCatalog& c, const std::filesystem::path& path);

ReferenceManifest references_from_json(const nlohmann::json& j, const ClassCatalog& catalog);
nlohmann::ordered_json references_to_json(const ReferenceManifest& r, const ClassCatalog& catalog);

DatasetBundle load_bundle(const std::filesystem::path& bundle_json);

/// Writes bundle.json plus catalog.json, labels.json, references.json and the
/// ZSEB matrices into `dir`.
void save_bundle(const DatasetBundle& b, const std::filesystem::path& dir);

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace zsfuse
