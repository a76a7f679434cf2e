#include "zsfuse/bundle.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "zsfuse/error.hpp"

namespace zsfuse {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

ClassCatalog::ClassCatalog(std::vector<ClassEntry> entries) : entries_(std::move(entries)) {
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        const auto& name = entries_[i].name;
        if (name.empty()) throw Error(ErrorKind::validation, "catalog entry " + std::to_string(i) + " has an empty name");
        if (!index_.emplace(name, i).second) throw Error(ErrorKind::validation, "duplicate class name '" + name + "'");
    }
}

ClassCatalog ClassCatalog::from_names(const std::vector<std::string>& names) {
    std::vector<ClassEntry> entries;
    entries.reserve(names.size());
    for (const auto& n : names) entries.push_back({n, default_prompt(n), SplitTag::closed});
    return ClassCatalog(std::move(entries));
}

std::optional<std::size_t> ClassCatalog::find(std::string_view name) const {
    auto it = index_.find(name);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::size_t ClassCatalog::index_of(std::string_view name) const {
    if (auto i = find(name)) return *i;
    throw Error(ErrorKind::validation, "class '" + std::string(name) + "' is not in the catalog");
}

std::vector<std::string> ClassCatalog::names() const {
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) out.push_back(e.name);
    return out;
}

std::size_t ClassCatalog::closed_count() const noexcept {
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.split == SplitTag::closed;
    return n;
}

std::string default_prompt(std::string_view class_name) { return "A photo of " + std::string(class_name); }

const ReferenceManifest::ClassLists& ReferenceManifest::lists(std::string_view backbone) const {
    auto it = lists_.find(backbone);
    if (it == lists_.end())
        throw Error(ErrorKind::config, "no reference manifest for backbone '" + std::string(backbone) + "'");
    return it->second;
}

std::vector<std::size_t> ReferenceManifest::counts(std::string_view backbone) const {
    std::vector<std::size_t> out;
    for (const auto& l : lists(backbone)) out.push_back(l.size());
    return out;
}

std::size_t DatasetBundle::test_rows() const { return test.empty() ? 0 : test.begin()->second.rows(); }

void DatasetBundle::validate(std::span<const Method> methods) const {
    const std::size_t n_classes = catalog.size();
    if (n_classes == 0) throw Error(ErrorKind::validation, "catalog is empty");

    std::optional<std::size_t> rows;
    for (const auto& [id, m] : test) {
        if (rows && *rows != m.rows())
            throw Error(ErrorKind::validation, "test matrices disagree on row count (backbone '" + id + "')");
        rows = m.rows();
    }
    if (rows && labels.size() != *rows)
        throw Error(ErrorKind::validation, "label count " + std::to_string(labels.size()) + " != test rows " +
                                               std::to_string(*rows));
    for (std::size_t label : labels) {
        if (label >= n_classes) throw Error(ErrorKind::validation, "test label outside the catalog");
    }

    for (Method m : methods) {
        const auto& bb = backbone(m);
        auto t = test.find(bb);
        if (t == test.end())
            throw Error(ErrorKind::config, std::string(to_string(m)) + " needs test embeddings for backbone '" + bb + "'");
        if (m == Method::text_image_clip) {
            if (!text) throw Error(ErrorKind::config, "text_image_clip needs a text embedding matrix");
            if (text->rows() != n_classes)
                throw Error(ErrorKind::validation, "text matrix has " + std::to_string(text->rows()) +
                                                       " rows for " + std::to_string(n_classes) + " classes");
            if (text->dim() != t->second.dim())
                throw Error(ErrorKind::validation, "text and test embeddings differ in dimension");
            continue;
        }
        auto r = references.find(bb);
        if (r == references.end())
            throw Error(ErrorKind::config, std::string(to_string(m)) + " needs reference embeddings for backbone '" + bb + "'");
        if (r->second.dim() != t->second.dim())
            throw Error(ErrorKind::validation, "reference and test embeddings differ in dimension for '" + bb + "'");
        const auto& lists = reference_manifest.lists(bb);
        if (lists.size() != n_classes)
            throw Error(ErrorKind::validation, "reference manifest for '" + bb + "' does not cover the catalog");
        for (std::size_t c = 0; c < n_classes; ++c) {
            if (lists[c].empty())
                throw Error(ErrorKind::config, "class '" + catalog[c].name + "' has no references for backbone '" + bb + "'");
            for (std::size_t idx : lists[c]) {
                if (idx >= r->second.rows())
                    throw Error(ErrorKind::validation, "reference index " + std::to_string(idx) + " out of range for '" +
                                                           bb + "'");
            }
        }
    }
}

nlohmann::json read_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorKind::format, path.string() + ": " + e.what());
    }
}

void write_text_file(const fs::path& path, std::string_view contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::io, "cannot open for writing: " + path.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error(ErrorKind::io, "write failed: " + path.string());
}

namespace {

template <typename F>
auto schema_guard(const std::string& what, F&& f) {
    try {
        return f();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::format, what + ": " + e.what());
    }
}

void write_json(const fs::path& path, const ojson& j) { write_text_file(path, j.dump(2) + "\n"); }

}  // namespace

ClassCatalog catalog_from_json(const nlohmann::json& j) {
    return schema_guard("catalog", [&] {
        std::vector<ClassEntry> entries;
        for (const auto& c : j.at("classes")) {
            ClassEntry e;
            e.name = c.at("name").get<std::string>();
            e.prompt = c.contains("prompt") ? c.at("prompt").get<std::string>() : default_prompt(e.name);
            const auto split = c.value("split", std::string("closed"));
            if (split == "closed") e.split = SplitTag::closed;
            else if (split == "open") e.split = SplitTag::open;
            else throw Error(ErrorKind::format, "catalog: split must be 'closed' or 'open', got '" + split + "'");
            entries.push_back(std::move(e));
        }
        return ClassCatalog(std::move(entries));
    });
}

ojson catalog_to_json(const ClassCatalog& c) {
    ojson classes = ojson::array();
    for (const auto& e : c.entries())
        classes.push_back({{"name", e.name}, {"prompt", e.prompt}, {"split", e.split == SplitTag::closed ? "closed" : "open"}});
    return {{"classes", classes}};
}

ClassCatalog load_catalog(const fs::path& path) { return catalog_from_json(read_json_file(path)); }

void save_catalog(const ClassCatalog& c, const fs::path& path) { write_json(path, catalog_to_json(c)); }

ReferenceManifest references_from_json(const nlohmann::json& j, const ClassCatalog& catalog) {
    return schema_guard("references", [&] {
        ReferenceManifest manifest;
        for (const auto& [backbone, classes] : j.items()) {
            ReferenceManifest::ClassLists lists(catalog.size());
            for (const auto& [name, indices] : classes.items())
                lists[catalog.index_of(name)] = indices.get<std::vector<std::size_t>>();
            manifest.set(backbone, std::move(lists));
        }
        return manifest;
    });
}

ojson references_to_json(const ReferenceManifest& r, const ClassCatalog& catalog) {
    ojson j = ojson::object();
    for (const auto& [backbone, lists] : r.all()) {
        ojson per_class = ojson::object();
        for (std::size_t c = 0; c < lists.size(); ++c) per_class[catalog[c].name] = lists[c];
        j[backbone] = per_class;
    }
    return j;
}

DatasetBundle load_bundle(const fs::path& bundle_json) {
    const auto j = read_json_file(bundle_json);
    const fs::path base = bundle_json.parent_path();
    auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };

    return schema_guard("bundle " + bundle_json.string(), [&] {
        if (j.value("format", std::string()) != "zsfuse-bundle")
            throw Error(ErrorKind::format, "bundle: missing \"format\": \"zsfuse-bundle\"");
        if (j.value("version", 0) != 1) throw Error(ErrorKind::format, "bundle: unsupported version");

        DatasetBundle b;
        b.catalog = load_catalog(resolve(j.at("catalog").get<std::string>()));

        const auto labels = read_json_file(resolve(j.at("labels").get<std::string>()));
        for (const auto& name : labels.at("labels")) b.labels.push_back(b.catalog.index_of(name.get<std::string>()));

        if (j.contains("text")) b.text = read_matrix(resolve(j.at("text").get<std::string>()));
        for (const auto& [id, p] : j.at("test").items()) b.test.emplace(id, read_matrix(resolve(p.get<std::string>())));
        if (j.contains("references")) {
            for (const auto& [id, p] : j.at("references").items())
                b.references.emplace(id, read_matrix(resolve(p.get<std::string>())));
        }
        if (j.contains("reference_manifest"))
            b.reference_manifest =
                references_from_json(read_json_file(resolve(j.at("reference_manifest").get<std::string>())), b.catalog);
        if (j.contains("methods")) {
            for (const auto& [name, bb] : j.at("methods").items()) {
                auto m = parse_method(name);
                if (!m) throw Error(ErrorKind::format, "bundle: unknown method '" + name + "'");
                b.method_backbone[index_of(*m)] = bb.get<std::string>();
            }
        }
        if (j.contains("provenance")) b.provenance = j.at("provenance");
        return b;
    });
}

void save_bundle(const DatasetBundle& b, const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorKind::io, "cannot create " + dir.string() + ": " + ec.message());

    ojson bundle;
    bundle["format"] = "zsfuse-bundle";
    bundle["version"] = 1;
    bundle["catalog"] = "catalog.json";
    save_catalog(b.catalog, dir / "catalog.json");

    ojson labels = ojson::array();
    for (std::size_t l : b.labels) labels.push_back(b.catalog[l].name);
    write_json(dir / "labels.json", ojson{{"labels", labels}});
    bundle["labels"] = "labels.json";

    if (b.text) {
        write_matrix(*b.text, dir / "text.zseb");
        bundle["text"] = "text.zseb";
    }
    ojson test = ojson::object();
    for (const auto& [id, m] : b.test) {
        const std::string file = "test_" + id + ".zseb";
        write_matrix(m, dir / file);
        test[id] = file;
    }
    bundle["test"] = test;
    if (!b.references.empty()) {
        ojson refs = ojson::object();
        for (const auto& [id, m] : b.references) {
            const std::string file = "refs_" + id + ".zseb";
            write_matrix(m, dir / file);
            refs[id] = file;
        }
        bundle["references"] = refs;
        write_json(dir / "references.json", references_to_json(b.reference_manifest, b.catalog));
        bundle["reference_manifest"] = "references.json";
    }
    ojson methods = ojson::object();
    for (Method m : kAllMethods) methods[std::string(to_string(m))] = b.backbone(m);
    bundle["methods"] = methods;
    bundle["provenance"] = b.provenance;
    write_json(dir / "bundle.json", bundle);
}

}  // namespace zsfuse
