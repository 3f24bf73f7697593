#pragma once

#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "odflow/errors.hpp"
#include "odflow/network.hpp"
#include "odflow/numio.hpp"

// Parsers for the public TNTP benchmark text formats: a metadata header of
// <TAG> value lines ending at <END OF METADATA>, then whitespace-separated
// records. `~` starts a comment that runs to end of line.

namespace odflow {

namespace tntp_detail {

inline std::string strip_comment(std::string line) {
    auto pos = line.find('~');
    if (pos != std::string::npos) line.erase(pos);
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
    return line;
}

inline bool blank(const std::string& s) {
    return s.find_first_not_of(" \t") == std::string::npos;
}

struct Metadata {
    std::map<std::string, std::string> tags;
    std::vector<std::string> body;        // remaining non-empty lines
    std::vector<std::size_t> body_lines;  // original line numbers (1-based)
};

inline Metadata split_metadata(std::istream& in) {
    Metadata md;
    std::string line;
    bool in_header = true;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = strip_comment(line);
        if (blank(line)) continue;
        if (in_header) {
            auto open = line.find('<');
            auto close = line.find('>');
            if (open != std::string::npos && close != std::string::npos && close > open) {
                std::string tag = line.substr(open + 1, close - open - 1);
                std::string value = line.substr(close + 1);
                auto first = value.find_first_not_of(" \t");
                auto last = value.find_last_not_of(" \t");
                value = first == std::string::npos ? "" : value.substr(first, last - first + 1);
                md.tags[tag] = value;
                if (tag == "END OF METADATA") in_header = false;
                continue;
            }
            // No tag found: header is over, treat as body.
            in_header = false;
        }
        md.body.push_back(line);
        md.body_lines.push_back(line_no);
    }
    return md;
}

inline long require_int_tag(const Metadata& md, const std::string& tag) {
    auto it = md.tags.find(tag);
    if (it == md.tags.end()) throw ParseError("missing metadata tag <" + tag + ">");
    try {
        return std::stol(it->second);
    } catch (...) {
        throw ParseError("metadata tag <" + tag + "> has non-integer value '" + it->second + "'");
    }
}

inline std::vector<std::string> tokens(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream in(line);
    std::string t;
    while (in >> t) out.push_back(t);
    return out;
}

}  // namespace tntp_detail

inline Network parse_tntp_network(std::istream& in) {
    using namespace tntp_detail;
    Metadata md = split_metadata(in);
    if (!md.tags.count("END OF METADATA")) throw ParseError("missing metadata tag <END OF METADATA>");
    const long n_nodes = require_int_tag(md, "NUMBER OF NODES");
    const long n_links = require_int_tag(md, "NUMBER OF LINKS");
    const long first_thru = require_int_tag(md, "FIRST THRU NODE");

    Network net;
    net.node_count = static_cast<int>(n_nodes);
    net.first_thru_node = static_cast<int>(first_thru - 1);  // file is 1-based
    if (net.first_thru_node < 0) net.first_thru_node = 0;

    for (std::size_t r = 0; r < md.body.size(); ++r) {
        const std::string where = "line " + std::to_string(md.body_lines[r]);
        std::string line = md.body[r];
        // Records end with ';'; drop it so it doesn't glue to the last field.
        for (char& c : line)
            if (c == ';') c = ' ';
        auto f = tokens(line);
        if (f.empty()) continue;
        if (f.size() < 10)
            throw ParseError(where + ": link row has " + std::to_string(f.size()) +
                             " fields, expected at least 10");
        double v[10];
        for (int i = 0; i < 10; ++i) v[i] = parse_double(f[i], where);
        Link l;
        l.id = static_cast<int>(net.links.size());
        l.from_node = static_cast<int>(v[0]) - 1;
        l.to_node = static_cast<int>(v[1]) - 1;
        l.capacity = v[2];
        l.length = v[3];
        l.free_flow_time = v[4];
        l.bpr_alpha = v[5];
        l.bpr_beta = v[6];
        l.speed = v[7];
        l.toll = v[8];
        l.link_type = v[9];
        net.links.push_back(l);
    }
    if (static_cast<long>(net.links.size()) != n_links)
        throw ParseError("file declares " + std::to_string(n_links) + " links but contains " +
                         std::to_string(net.links.size()));
    net.validate();
    return net;
}

inline Network parse_tntp_network(const std::string& text) {
    std::istringstream in(text);
    return parse_tntp_network(in);
}

/// Writes the network back in TNTP form. Reparsing the output reproduces
/// every link field exactly (values are printed shortest-round-trip).
inline std::string serialize_tntp_network(const Network& net) {
    std::string out;
    out += "<NUMBER OF NODES> " + std::to_string(net.node_count) + "\n";
    out += "<NUMBER OF LINKS> " + std::to_string(net.link_count()) + "\n";
    out += "<FIRST THRU NODE> " + std::to_string(net.first_thru_node + 1) + "\n";
    out += "<END OF METADATA>\n";
    out += "~ init term capacity length fft b power speed toll type ;\n";
    for (const Link& l : net.links) {
        out += std::to_string(l.from_node + 1) + "\t" + std::to_string(l.to_node + 1) + "\t" +
               format_double(l.capacity) + "\t" + format_double(l.length) + "\t" +
               format_double(l.free_flow_time) + "\t" + format_double(l.bpr_alpha) + "\t" +
               format_double(l.bpr_beta) + "\t" + format_double(l.speed) + "\t" +
               format_double(l.toll) + "\t" + format_double(l.link_type) + "\t;\n";
    }
    return out;
}

/// Parses a TNTP trips file into an N x N demand matrix. Zone ids are
/// embedded at indices 0..Z-1 when the zone count is below the node count;
/// unlisted pairs are zero and the diagonal is forced to zero.
inline DemandMatrix parse_tntp_trips(std::istream& in, int node_count) {
    using namespace tntp_detail;
    Metadata md = split_metadata(in);
    const long zones = require_int_tag(md, "NUMBER OF ZONES");
    if (zones > node_count)
        throw ValidationError("trips file declares " + std::to_string(zones) +
                              " zones but the network has only " + std::to_string(node_count) +
                              " nodes");

    DemandMatrix demand(node_count, node_count);
    long origin = -1;
    for (std::size_t r = 0; r < md.body.size(); ++r) {
        const std::string where = "line " + std::to_string(md.body_lines[r]);
        const std::string& line = md.body[r];
        auto f = tokens(line);
        if (!f.empty() && (f[0] == "Origin" || f[0] == "origin" || f[0] == "ORIGIN")) {
            if (f.size() < 2) throw ParseError(where + ": Origin line missing id");
            origin = std::stol(f[1]);
            if (origin < 1 || origin > zones)
                throw ValidationError(where + ": origin zone " + std::to_string(origin) +
                                      " out of range [1, " + std::to_string(zones) + "]");
            continue;
        }
        if (origin < 0) throw ParseError(where + ": destination entry before any Origin line");
        // Entries look like "dest : flow ;", several per line.
        std::string entry;
        std::istringstream es(line);
        while (std::getline(es, entry, ';')) {
            if (blank(entry)) continue;
            auto colon = entry.find(':');
            if (colon == std::string::npos)
                throw ParseError(where + ": expected 'dest : flow ;' entry, got '" + entry + "'");
            long dest = 0;
            try {
                dest = std::stol(entry.substr(0, colon));
            } catch (...) {
                throw ParseError(where + ": invalid destination id in '" + entry + "'");
            }
            if (dest < 1 || dest > zones)
                throw ValidationError(where + ": destination zone " + std::to_string(dest) +
                                      " out of range [1, " + std::to_string(zones) + "]");
            double flow = parse_double(entry.substr(colon + 1), where);
            if (flow < 0) throw ValidationError(where + ": negative demand " + format_double(flow));
            if (dest != origin) demand(static_cast<int>(origin - 1), static_cast<int>(dest - 1)) = flow;
        }
    }
    return demand;
}

inline DemandMatrix parse_tntp_trips(const std::string& text, int node_count) {
    std::istringstream in(text);
    return parse_tntp_trips(in, node_count);
}

}  // namespace odflow
