#include "ssw/assembly.hpp"

#include <algorithm>
#include <map>

namespace ssw {

Junction kcl_junction(PortRef to, std::vector<JunctionMember> members) {
    if (members.empty()) throw SchemaError("kcl_junction: no members");
    return Junction{std::move(to), std::move(members)};
}

namespace {

struct Layout {
    std::map<std::string, int> block_of;  // label -> index
    std::vector<int> x_off, u_off, y_off;
    int n_x = 0, n_u = 0, n_y = 0;
};

Layout layout_of(const std::vector<StateSpaceBlock>& blocks) {
    Layout l;
    for (std::size_t k = 0; k < blocks.size(); ++k) {
        const auto& b = blocks[k];
        if (!l.block_of.emplace(b.label, static_cast<int>(k)).second)
            throw SchemaError("duplicate block label '" + b.label + "'");
        l.x_off.push_back(l.n_x);
        l.u_off.push_back(l.n_u);
        l.y_off.push_back(l.n_y);
        l.n_x += b.n_x();
        l.n_u += b.n_u();
        l.n_y += b.n_y();
    }
    return l;
}

struct Channel {
    int block, offset, width;
    PortKind kind;
};

Channel in_channel(const std::vector<StateSpaceBlock>& blocks, const Layout& l,
                   const PortRef& r) {
    auto it = l.block_of.find(r.block);
    if (it == l.block_of.end()) throw SchemaError("unknown block '" + r.block + "'");
    const auto& p = blocks[it->second].in_port(r.port);
    return {it->second, l.u_off[it->second] + blocks[it->second].in_offset(r.port),
            p.width, p.kind};
}

Channel out_channel(const std::vector<StateSpaceBlock>& blocks, const Layout& l,
                    const PortRef& r) {
    auto it = l.block_of.find(r.block);
    if (it == l.block_of.end()) throw SchemaError("unknown block '" + r.block + "'");
    const auto& p = blocks[it->second].out_port(r.port);
    return {it->second, l.y_off[it->second] + blocks[it->second].out_offset(r.port),
            p.width, p.kind};
}

}  // namespace

AssembledSystem connect(const std::vector<StateSpaceBlock>& blocks,
                        const ConnectionGraph& graph) {
    Layout l = layout_of(blocks);

    // stacked block-diagonal system
    Mat a = Mat::Zero(l.n_x, l.n_x), b = Mat::Zero(l.n_x, l.n_u);
    Mat c = Mat::Zero(l.n_y, l.n_x), d = Mat::Zero(l.n_y, l.n_u);
    for (std::size_t k = 0; k < blocks.size(); ++k) {
        const auto& blk = blocks[k];
        a.block(l.x_off[k], l.x_off[k], blk.n_x(), blk.n_x()) = blk.A;
        b.block(l.x_off[k], l.u_off[k], blk.n_x(), blk.n_u()) = blk.B;
        c.block(l.y_off[k], l.x_off[k], blk.n_y(), blk.n_x()) = blk.C;
        d.block(l.y_off[k], l.u_off[k], blk.n_y(), blk.n_u()) = blk.D;
    }

    Mat k_map = Mat::Zero(l.n_u, l.n_y);
    std::vector<int> driven(l.n_u, 0);
    auto claim = [&](const Channel& in) {
        for (int j = 0; j < in.width; ++j)
            if (driven[in.offset + j]++)
                throw SchemaError("input channel driven more than once");
    };
    for (const auto& w : graph.wires) {
        Channel dst = in_channel(blocks, l, w.to);
        Channel src = out_channel(blocks, l, w.from);
        if (dst.kind != src.kind || dst.width != src.width)
            throw SchemaError("port kind mismatch on wire " + w.from.block + "." +
                              w.from.port + " -> " + w.to.block + "." + w.to.port);
        claim(dst);
        for (int j = 0; j < dst.width; ++j)
            k_map(dst.offset + j, src.offset + j) += w.sign;
    }
    for (const auto& jn : graph.junctions) {
        Channel dst = in_channel(blocks, l, jn.to);
        if (dst.kind != PortKind::CurrentDq)
            throw SchemaError("junction target must be a current port");
        claim(dst);
        for (const auto& m : jn.members) {
            Channel src = out_channel(blocks, l, m.port);
            if (src.kind != PortKind::CurrentDq)
                throw SchemaError("junction member must be a current port: " +
                                  m.port.block + "." + m.port.port);
            for (int j = 0; j < dst.width; ++j)
                k_map(dst.offset + j, src.offset + j) += m.sign;
        }
    }

    AssembledSystem sys;
    // external input selector
    int n_ext_in = 0;
    for (const auto& r : graph.external_in)
        n_ext_in += in_channel(blocks, l, r).width;
    Mat p_sel = Mat::Zero(l.n_u, n_ext_in);
    {
        int col = 0;
        for (const auto& r : graph.external_in) {
            Channel ch = in_channel(blocks, l, r);
            claim(ch);
            for (int j = 0; j < ch.width; ++j) {
                p_sel(ch.offset + j, col) = 1.0;
                sys.in_labels.push_back(r.block + "." + r.port +
                                        (ch.width == 2 ? (j ? ".q" : ".d") : ""));
                ++col;
            }
        }
    }

    Mat loop = Mat::Identity(l.n_u, l.n_u) - k_map * d;
    {
        Eigen::JacobiSVD<Mat> svd(loop);
        double smin = svd.singularValues().minCoeff();
        double smax = svd.singularValues().maxCoeff();
        if (!(smin > 0) || smax / smin > 1e12)
            throw NumericalError("ill-posed algebraic loop: cond(I - K D) > 1e12");
    }
    Eigen::PartialPivLU<Mat> lu(loop);
    Mat u_of_x = lu.solve(k_map * c);   // u = (I-KD)^-1 K C x + (I-KD)^-1 P u_ext
    Mat u_of_e = lu.solve(p_sel);

    sys.a_ps = a + b * u_of_x;
    sys.b = b * u_of_e;
    Mat y_of_x = c + d * u_of_x;
    Mat y_of_e = d * u_of_e;

    int n_ext_out = 0;
    for (const auto& r : graph.external_out)
        n_ext_out += out_channel(blocks, l, r).width;
    sys.c = Mat::Zero(n_ext_out, l.n_x);
    sys.d = Mat::Zero(n_ext_out, n_ext_in);
    {
        int row = 0;
        for (const auto& r : graph.external_out) {
            Channel ch = out_channel(blocks, l, r);
            for (int j = 0; j < ch.width; ++j) {
                sys.c.row(row) = y_of_x.row(ch.offset + j);
                sys.d.row(row) = y_of_e.row(ch.offset + j);
                sys.out_labels.push_back(r.block + "." + r.port +
                                         (ch.width == 2 ? (j ? ".q" : ".d") : ""));
                ++row;
            }
        }
    }
    for (const auto& blk : blocks)
        for (int i = 0; i < blk.n_x(); ++i)
            sys.state_labels.emplace_back(
                blk.label, i < static_cast<int>(blk.state_names.size())
                               ? blk.state_names[i]
                               : "x" + std::to_string(i));
    return sys;
}

AssembledSystem assemble_full_grid(const NetworkModel& net,
                                   const InitialStateSet& init,
                                   const LoadflowResult& sol) {
    std::vector<StateSpaceBlock> blocks;
    ConnectionGraph g;

    // aggregated shunt susceptance per bus: line-charging halves + devices
    std::map<int, double> bcap;
    for (const auto& br : net.branches) {
        bcap[br.from] += br.b_shunt / 2.0;
        bcap[br.to] += br.b_shunt / 2.0;
    }
    for (const auto& s : net.shunts) bcap[s.bus] += s.q_mvar / net.base.s_base_mva;

    std::map<int, std::string> cap_label;     // network buses with a cap block
    std::map<int, std::string> device_label;  // machine buses
    std::map<int, std::vector<JunctionMember>> junction;

    for (const auto& [bus, b] : bcap) {
        if (b <= 0) continue;
        cap_label[bus] = "cap" + std::to_string(bus);
        blocks.push_back(shunt_block(cap_label[bus], b, net.base));
    }
    for (const auto& gspec : net.generators) {
        blocks.push_back(linearize_sg(gspec, init.at_bus(gspec.bus), net.base));
        device_label[gspec.bus] = blocks.back().label;
    }
    for (const auto& bspec : net.ibrs) {
        blocks.push_back(linearize_ibr(bspec, init.at_bus(bspec.bus), net.base));
        device_label[bspec.bus] = blocks.back().label;
    }

    auto wire = [&](std::string fb, std::string fp, std::string tb, std::string tp) {
        g.wires.push_back({{std::move(fb), std::move(fp)},
                           {std::move(tb), std::move(tp)},
                           1.0});
    };
    auto attach_port = [&](const std::string& blk, const std::string& v_in,
                           const std::string& i_out, int bus) {
        // the block sees the bus voltage; its current leaves the bus node
        auto cap = cap_label.find(bus);
        if (cap == cap_label.end())
            throw SchemaError("bus " + std::to_string(bus) +
                              " has no capacitor block; cannot form a voltage node");
        wire(cap->second, "v", blk, v_in);
        junction[bus].push_back({{blk, i_out}, -1.0});
    };

    for (const auto& t : net.transformers) {
        auto b = transformer_block(t, net.base);
        std::string lbl = b.label;
        blocks.push_back(std::move(b));
        auto dev1 = device_label.find(t.from);
        if (dev1 != device_label.end()) {
            // machine side: transformer sees the machine voltage and feeds
            // its port-1 current straight into the machine
            wire(dev1->second, "v", lbl, "v1");
            wire(lbl, "i1", dev1->second, "i");
        } else {
            attach_port(lbl, "v1", "i1", t.from);
        }
        attach_port(lbl, "v2", "i2", t.to);
    }
    for (std::size_t k = 0; k < net.branches.size(); ++k) {
        const auto& br = net.branches[k];
        auto lb = line_blocks(br, net.base);
        std::string lbl = lb.rl.label + "#" + std::to_string(k);
        lb.rl.label = lbl;
        blocks.push_back(std::move(lb.rl));
        auto need_cap = [&](int bus) {
            if (!cap_label.count(bus))
                throw SchemaError("bus " + std::to_string(bus) +
                                  " has no capacitor block; cannot form a voltage node");
        };
        need_cap(br.from);
        need_cap(br.to);
        wire(cap_label[br.from], "v", lbl, "va");
        wire(cap_label[br.to], "v", lbl, "vb");
        junction[br.from].push_back({{lbl, "i"}, -1.0});  // current leaves 'from'
        junction[br.to].push_back({{lbl, "i"}, +1.0});    // and enters 'to'
    }
    for (const auto& ld : net.loads) {
        auto b = load_block(ld, sol.v[net.bus_index(ld.bus)], net.base);
        std::string lbl = b.label;
        blocks.push_back(std::move(b));
        attach_port(lbl, "v", "i", ld.bus);
    }
    for (const auto& [bus, members] : junction)
        g.junctions.push_back(kcl_junction({cap_label.at(bus), "i"}, members));

    return connect(blocks, g);
}

}  // namespace ssw
