#include "coc/json_schema.hpp"

namespace coc {

namespace {

using nlohmann::json;

bool has_type(const json& v, const std::string& type) {
    if (type == "object") return v.is_object();
    if (type == "array") return v.is_array();
    if (type == "string") return v.is_string();
    if (type == "boolean") return v.is_boolean();
    if (type == "null") return v.is_null();
    if (type == "number") return v.is_number();
    if (type == "integer") {
        if (v.is_number_integer()) return true;
        if (v.is_number_float()) {
            const double d = v.get<double>();
            return d == static_cast<double>(static_cast<long long>(d));
        }
        return false;
    }
    return false;
}

std::string pointer_escape(const std::string& key) {
    std::string out;
    for (char c : key) {
        if (c == '~') {
            out += "~0";
        } else if (c == '/') {
            out += "~1";
        } else {
            out.push_back(c);
        }
    }
    return out;
}

void check(const json& schema, const json& v, const std::string& at, std::vector<std::string>& out) {
    const std::string where = at.empty() ? "/" : at;
    if (auto t = schema.find("type"); t != schema.end()) {
        bool ok = false;
        if (t->is_array()) {
            for (const auto& one : *t) {
                ok = ok || has_type(v, one.get<std::string>());
            }
        } else {
            ok = has_type(v, t->get<std::string>());
        }
        if (!ok) {
            out.push_back(where + ": expected type " + t->dump() + ", got " + v.type_name());
            return;
        }
    }
    if (auto c = schema.find("const"); c != schema.end() && *c != v) {
        out.push_back(where + ": expected " + c->dump() + ", got " + v.dump());
    }
    if (auto e = schema.find("enum"); e != schema.end()) {
        bool found = false;
        for (const auto& option : *e) {
            found = found || option == v;
        }
        if (!found) {
            out.push_back(where + ": " + v.dump() + " not in " + e->dump());
        }
    }
    if (v.is_number()) {
        const double d = v.get<double>();
        if (auto m = schema.find("minimum"); m != schema.end() && d < m->get<double>()) {
            out.push_back(where + ": " + v.dump() + " below minimum " + m->dump());
        }
        if (auto m = schema.find("maximum"); m != schema.end() && d > m->get<double>()) {
            out.push_back(where + ": " + v.dump() + " above maximum " + m->dump());
        }
        if (auto m = schema.find("exclusiveMinimum"); m != schema.end() && d <= m->get<double>()) {
            out.push_back(where + ": " + v.dump() + " not above " + m->dump());
        }
    }
    if (v.is_string()) {
        if (auto m = schema.find("minLength"); m != schema.end() && v.get<std::string>().size() < m->get<std::size_t>()) {
            out.push_back(where + ": string shorter than " + m->dump());
        }
    }
    if (v.is_array()) {
        if (auto m = schema.find("minItems"); m != schema.end() && v.size() < m->get<std::size_t>()) {
            out.push_back(where + ": fewer than " + m->dump() + " items");
        }
        if (auto items = schema.find("items"); items != schema.end()) {
            for (std::size_t i = 0; i < v.size(); ++i) {
                check(*items, v[i], at + "/" + std::to_string(i), out);
            }
        }
    }
    if (v.is_object()) {
        if (auto req = schema.find("required"); req != schema.end()) {
            for (const auto& key : *req) {
                if (!v.contains(key.get<std::string>())) {
                    out.push_back(where + ": missing required property \"" + key.get<std::string>() + "\"");
                }
            }
        }
        const auto props = schema.find("properties");
        const auto additional = schema.find("additionalProperties");
        for (const auto& [key, value] : v.items()) {
            const std::string child = at + "/" + pointer_escape(key);
            if (props != schema.end() && props->contains(key)) {
                check(props->at(key), value, child, out);
            } else if (additional != schema.end() && additional->is_boolean() && !additional->get<bool>()) {
                out.push_back(child + ": unexpected property");
            }
        }
    }
}

}  // namespace

std::vector<std::string> validate_json_schema(const nlohmann::json& schema, const nlohmann::json& instance) {
    std::vector<std::string> out;
    check(schema, instance, "", out);
    return out;
}

}  // namespace coc
