#pragma once

#include <fmt/format.h>

#include <nlohmann/json.hpp>
#include <string>

#include "tfa/network.hpp"

namespace tfa {

// Network documents: spec plus flat row-major weight arrays, every value
// written with 17 significant digits so a reload is bit-exact.
namespace serial {

inline void write_matrix(std::string& out, const Matrix& m) {
    out += fmt::format("{{\"rows\":{},\"cols\":{},\"data\":[", m.rows(), m.cols());
    bool first = true;
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            if (!first) out += ',';
            first = false;
            out += fmt::format("{:.17g}", m(i, j));
        }
    }
    out += "]}";
}

inline Matrix read_matrix(const nlohmann::json& j) {
    const auto rows = j.at("rows").get<Index>();
    const auto cols = j.at("cols").get<Index>();
    const auto& data = j.at("data");
    if (static_cast<Index>(data.size()) != rows * cols) throw StructuralError("network json: data length mismatch");
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index c = 0; c < cols; ++c) m(i, c) = data[static_cast<std::size_t>(i * cols + c)].get<double>();
    return m;
}

inline Vector read_vector(const nlohmann::json& j) {
    Matrix m = read_matrix(j);
    if (m.cols() != 1) throw StructuralError("network json: expected a column vector");
    return m.col(0);
}

inline void write_field(std::string& out, const char* name, const Matrix& m, bool comma = true) {
    out += fmt::format("\"{}\":", name);
    write_matrix(out, m);
    if (comma) out += ',';
}

}  // namespace serial

inline nlohmann::json spec_to_json(const ArchSpec& s) {
    return {{"d_x", s.d_x}, {"d_y", s.d_y}, {"n", s.n}, {"D", s.D}, {"H", s.H}, {"S", s.S}, {"W", s.W}, {"L", s.L}};
}

inline ArchSpec spec_from_json(const nlohmann::json& j) {
    ArchSpec s;
    s.d_x = j.at("d_x").get<std::size_t>();
    s.d_y = j.at("d_y").get<std::size_t>();
    s.n = j.at("n").get<std::size_t>();
    s.D = j.at("D").get<std::size_t>();
    s.H = j.at("H").get<std::size_t>();
    s.S = j.at("S").get<std::size_t>();
    s.W = j.at("W").get<std::size_t>();
    s.L = j.at("L").get<std::size_t>();
    return s;
}

inline std::string network_to_json(const TransformerNetwork& net) {
    using serial::write_field;
    std::string out = "{\"format\":\"tfa-network/1\",";
    out += fmt::format("\"kind\":\"{}\",", net.kind() == NetworkKind::standard ? "standard" : "generalized");
    out += "\"spec\":" + spec_to_json(net.spec).dump() + ",";
    out += "\"embedding\":{";
    write_field(out, "E_in", net.embedding.E_in);
    write_field(out, "P", net.embedding.P, false);
    out += "},\"blocks\":[";
    for (std::size_t l = 0; l < net.blocks.size(); ++l) {
        if (l) out += ',';
        const auto& b = net.blocks[l];
        out += "{\"attention\":{\"heads\":[";
        for (std::size_t h = 0; h < b.attention.heads.size(); ++h) {
            if (h) out += ',';
            const auto& head = b.attention.heads[h];
            out += '{';
            write_field(out, "W_V", head.W_V);
            write_field(out, "W_K", head.W_K);
            write_field(out, "W_Q", head.W_Q);
            write_field(out, "W_O", head.W_O, false);
            out += '}';
        }
        out += "]},\"feedforward\":{";
        if (const auto* ff = std::get_if<FeedForwardLayer>(&b.feedforward)) {
            out += "\"type\":\"standard\",";
            write_field(out, "W1", ff->W1);
            write_field(out, "b1", ff->b1);
            write_field(out, "W2", ff->W2);
            write_field(out, "b2", ff->b2, false);
        } else {
            const auto& g = std::get<GeneralizedFeedForwardLayer>(b.feedforward);
            out += "\"type\":\"generalized\",";
            write_field(out, "W1", g.W1);
            write_field(out, "B1", g.B1);
            write_field(out, "W2", g.W2);
            write_field(out, "B2", g.B2, false);
        }
        out += "}}";
    }
    out += "],\"projection\":{";
    write_field(out, "E_out", net.projection.E_out, false);
    out += "}}";
    return out;
}

inline TransformerNetwork network_from_json(const std::string& text) {
    using serial::read_matrix;
    using serial::read_vector;
    const auto j = nlohmann::json::parse(text);
    if (j.at("format").get<std::string>() != "tfa-network/1") throw StructuralError("network json: unknown format");
    TransformerNetwork net;
    net.spec = spec_from_json(j.at("spec"));
    net.embedding.E_in = read_matrix(j.at("embedding").at("E_in"));
    net.embedding.P = read_matrix(j.at("embedding").at("P"));
    for (const auto& jb : j.at("blocks")) {
        Block b;
        for (const auto& jh : jb.at("attention").at("heads")) {
            b.attention.heads.push_back(
                {read_matrix(jh.at("W_V")), read_matrix(jh.at("W_K")), read_matrix(jh.at("W_Q")), read_matrix(jh.at("W_O"))});
        }
        const auto& jf = jb.at("feedforward");
        if (jf.at("type").get<std::string>() == "standard") {
            b.feedforward = FeedForwardLayer{read_matrix(jf.at("W1")), read_vector(jf.at("b1")), read_matrix(jf.at("W2")),
                                             read_vector(jf.at("b2"))};
        } else {
            b.feedforward = GeneralizedFeedForwardLayer{read_matrix(jf.at("W1")), read_matrix(jf.at("B1")),
                                                        read_matrix(jf.at("W2")), read_matrix(jf.at("B2"))};
        }
        net.blocks.push_back(std::move(b));
    }
    net.projection.E_out = read_matrix(j.at("projection").at("E_out"));
    net.validate();
    return net;
}

}  // namespace tfa
