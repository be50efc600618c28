#include <gtest/gtest.h>

#include <sstream>

#include "sigamp/edge_io.hpp"
#include "sigamp/errors.hpp"

using namespace sigamp;

TEST(EdgeFile, ParsesHeaderAndRecords) {
    std::istringstream in("user,node,day,use_promo,device_spoofing\r\nu1,n1,0,1,0\n\nu2,n1,3,0,1\n");
    const auto file = read_edges(in);
    EXPECT_EQ(file.registry.ids(), (std::vector<std::string>{"use_promo", "device_spoofing"}));
    ASSERT_EQ(file.edges.size(), 2u);
    EXPECT_EQ(file.edges[0], (TransactionEdge{UserId("u1"), NodeId("n1"), 0, 0b01}));
    EXPECT_EQ(file.edges[1], (TransactionEdge{UserId("u2"), NodeId("n1"), 3, 0b10}));
}

TEST(EdgeFile, ErrorListsEveryBadLine) {
    std::istringstream in("user,node,day,a\nu1,n1,0,1\nu1,n1,x,1\nu2,n2,1,2\nu3,n3,1\nu4,n4,2,0\n");
    try {
        read_edges(in);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::malformed_input);
        const std::string msg = e.what();
        EXPECT_NE(msg.find("3 malformed line(s): 3,4,5"), std::string::npos) << msg;
    }
}

TEST(EdgeFile, BadHeaderRejected) {
    std::istringstream missing("");
    EXPECT_THROW(read_edges(missing), Error);
    std::istringstream wrong("node,user,day,a\n");
    EXPECT_THROW(read_edges(wrong), Error);
    std::istringstream dup("user,node,day,a,a\n");
    EXPECT_THROW(read_edges(dup), Error);
}

TEST(EdgeFile, NegativeDayAndEmptyIdRejected) {
    std::istringstream neg("user,node,day\nu,n,-1\n");
    EXPECT_THROW(read_edges(neg), Error);
    std::istringstream empty("user,node,day\n,n,1\n");
    EXPECT_THROW(read_edges(empty), Error);
}

TEST(EdgeFile, WriteReadRoundTripProperty) {
    const auto scenario = generate(preset("case2-desk"));
    std::ostringstream out;
    write_edges(out, scenario.registry, scenario.edges);
    std::istringstream in(out.str());
    const auto file = read_edges(in);
    EXPECT_EQ(file.registry, scenario.registry);
    EXPECT_EQ(file.edges, scenario.edges);
}

TEST(EdgeReader, StreamsWithLineNumbers) {
    std::istringstream in("user,node,day,a\nu1,n1,0,1\nbad\n");
    EdgeReader reader(in);
    TransactionEdge e;
    ASSERT_TRUE(reader.next(e));
    EXPECT_EQ(reader.line(), 2u);
    try {
        reader.next(e);
        FAIL();
    } catch (const Error& err) {
        EXPECT_NE(std::string(err.what()).find("line 3"), std::string::npos);
    }
}

TEST(GroundTruthFile, RoundTrip) {
    const auto scenario = generate(preset("case2-desk"));
    std::stringstream buffer;
    write_ground_truth(buffer, scenario.truth);
    const auto back = read_ground_truth(buffer);
    EXPECT_EQ(back.signals, scenario.truth.signals);
    EXPECT_EQ(back.sybil_users, scenario.truth.sybil_users);
    EXPECT_EQ(back.cashout_nodes, scenario.truth.cashout_nodes);
    EXPECT_EQ(back.carriers, scenario.truth.carriers);
    EXPECT_EQ(back.attack_window, scenario.truth.attack_window);
}

TEST(GroundTruthFile, RejectsWrongFormat) {
    std::istringstream in(R"({"format":"other","version":1})");
    EXPECT_THROW(read_ground_truth(in), Error);
    std::istringstream broken("{");
    EXPECT_THROW(read_ground_truth(broken), Error);
}
