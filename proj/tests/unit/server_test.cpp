#include "uatrust/server/config.hpp"

#include "../support/fixtures.hpp"

#include <gtest/gtest.h>

#include <cstring>
#include <fstream>
#include <random>
#include <unistd.h>

using namespace uatrust;
using namespace uatrust::server;
using namespace testsupport;
using client::ClientErrc;
using client::Session;
using client::UserIdentity;
using codec::MessageSecurityMode;

namespace {

std::filesystem::path temp_dir(const std::string& name)
{
    auto p = std::filesystem::temp_directory_path() / ("uatrust_server_" + std::to_string(::getpid()) + "_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

codec::EndpointDescription secure_endpoint(Server& s)
{
    return endpoint_with(client::discover(s.url()), MessageSecurityMode::SignAndEncrypt);
}

Session connect_secure(Server& s, const std::string& client_name = "Client",
                       UserIdentity user = UserIdentity::user("operator", "secret"))
{
    return Session::connect(secure_endpoint(s), client_config(client_name, pki::TrustPolicy::accept_all(), user));
}

// An OPN chunk for the given mode/policy from an arbitrary identity, encrypted to the server.
Bytes secure_open_chunk(const pki::Identity& from, const pki::CertificateRecord& to, MessageSecurityMode mode,
                        const secchan::SecurityPolicySuite& suite)
{
    codec::OpenSecureChannelRequest req;
    req.security_mode = mode;
    req.client_nonce = secchan::fresh_nonce(suite);
    codec::ChannelFraming f;
    f.asymmetric = secchan::asymmetric_header(suite, &from, &to);
    auto c = codec::encode_chunks(req, codec::HeaderKind::Asymmetric, &f, 1).front();
    return secchan::protect_open_secure_channel(c, from, to, suite);
}

std::string peek_policy(ByteView chunk)
{
    codec::Reader r(chunk.subspan(12));
    codec::UaString uri;
    codec::decode(r, uri);
    return uri.value_or("");
}

}  // namespace

TEST(ServerConfig, SecureEndpointWithoutIdentityIsRejected)
{
    auto cfg = server_config("Srv", pki::TrustPolicy::strict());
    cfg.identity.reset();
    EXPECT_THROW(validate_config(cfg), ServerError);
    EXPECT_THROW(Server::start(cfg), ServerError);
}

TEST(ServerConfig, ModeAndPolicyMustAgree)
{
    auto cfg = server_config("Srv", pki::TrustPolicy::strict());
    cfg.endpoints.push_back({"", MessageSecurityMode::Sign, std::string(pu::None), {}});
    EXPECT_THROW(validate_config(cfg), ServerError);
    cfg = server_config("Srv", pki::TrustPolicy::strict());
    cfg.endpoints.push_back({"", MessageSecurityMode::None, std::string(pu::Basic256Sha256), {}});
    EXPECT_THROW(validate_config(cfg), ServerError);
    cfg = server_config("Srv", pki::TrustPolicy::strict());
    cfg.endpoints.push_back({"", MessageSecurityMode::SignAndEncrypt, std::string(pu::Basic256), {}});
    EXPECT_THROW(validate_config(cfg), secchan::SecError);
}

TEST(ServerConfig, LoadsFromJsonFile)
{
    const auto dir = temp_dir("cfg");
    save_identity(identity("FileSrv"), dir / "srv.der", dir / "srv.pk8");
    std::ofstream(dir / "server.json") << R"({
        "application": {"uri": "urn:test:FileSrv", "name": "File server"},
        "identity": {"certificate": "srv.der", "key": "srv.pk8"},
        "listen": "127.0.0.1:0",
        "endpoints": [
            {"mode": "None", "policy": "None", "user_tokens": [{"type": "Anonymous"}]},
            {"mode": "SignAndEncrypt", "policy": "Basic256Sha256",
             "user_tokens": [{"type": "UserName"}, {"type": "Anonymous"}]}
        ],
        "trust": {"profile": "P2_DefaultAcceptAll", "auto_accept": true, "store": "pki"},
        "users": {"alice": "wonder"},
        "anonymous_allowed": true,
        "nodes": [
            {"id": "ns=1;s=flow", "type": "Double", "value": 3.5, "writable": true, "name": "Flow"},
            {"id": "ns=1;s=mode", "type": "String", "value": "AUTO"}
        ]
    })";
    auto cfg = load_server_config(dir / "server.json");
    EXPECT_EQ(cfg.port, 0);
    EXPECT_EQ(cfg.trust_policy.kind, pki::TrustPolicyKind::AcceptAllDefaultFlag);
    EXPECT_TRUE(cfg.trust_policy.auto_accept);
    EXPECT_EQ(cfg.endpoints.size(), 2u);
    EXPECT_EQ(cfg.endpoints[1].security_policy_uri, pu::Basic256Sha256);
    EXPECT_EQ(cfg.users.at("alice"), "wonder");
    EXPECT_TRUE(std::filesystem::exists(dir / "pki" / "trusted"));

    auto server = Server::start(cfg);
    auto session = Session::connect(secure_endpoint(*server),
                                    client_config("Client", pki::TrustPolicy::accept_all(), UserIdentity::user("alice", "wonder")));
    EXPECT_EQ(session.read(codec::NodeId::parse("ns=1;s=flow")), codec::Variant(3.5));
    EXPECT_EQ(session.read(codec::NodeId::parse("ns=1;s=mode")), codec::Variant("AUTO"));
    EXPECT_EQ(session.write(codec::NodeId::parse("ns=1;s=flow"), codec::Variant(4.0)), status::Good);
    session.close();
    std::filesystem::remove_all(dir);
}

TEST(ServerConfig, BadFilesNameTheProblem)
{
    const auto dir = temp_dir("badcfg");
    std::ofstream(dir / "a.json") << R"({"endpoints": [{"mode": "Sideways"}]})";
    std::ofstream(dir / "b.json") << R"({"endpoints": [{"mode": "None"}], "trust": {"profile": "Trusting"}})";
    std::ofstream(dir / "c.json") << "{not json";
    EXPECT_THROW(load_server_config(dir / "a.json"), ServerError);
    EXPECT_THROW(load_server_config(dir / "b.json"), pki::ConfigError);
    EXPECT_THROW(load_server_config(dir / "c.json"), pki::ConfigError);
    std::filesystem::remove_all(dir);
}

TEST(ServerLifecycle, StopReleasesThePort)
{
    auto cfg = server_config("Srv", pki::TrustPolicy::strict());
    auto server = Server::start(cfg);
    const auto port = server->port();
    server->stop();
    server.reset();
    cfg.port = port;
    EXPECT_NO_THROW(Server::start(cfg)->stop());
}

TEST(ServerLifecycle, BindFailureIsReported)
{
    auto cfg = server_config("Srv", pki::TrustPolicy::strict());
    auto first = Server::start(cfg);
    cfg.port = first->port();
    try {
        Server::start(cfg);
        FAIL() << "second bind succeeded";
    } catch (const net::NetError& e) {
        EXPECT_EQ(e.code(), net::NetErrc::BindFailed);
    }
}

TEST(ServerLifecycle, EndpointUrlsFollowTheListenAddress)
{
    auto server = Server::start(server_config("Srv", pki::TrustPolicy::strict()));
    for (const auto& e : server->endpoint_descriptions()) EXPECT_EQ(e.endpoint_url, server->url());
}

TEST(Discovery, FindServersReturnsTheApplication)
{
    auto server = Server::start(server_config("Srv", pki::TrustPolicy::strict()));
    const auto apps = client::find_servers(server->url());
    ASSERT_EQ(apps.size(), 1u);
    EXPECT_EQ(apps[0].application_uri, "urn:test:Srv");
    EXPECT_EQ(apps[0].application_type, codec::ApplicationType::Server);
    EXPECT_EQ(apps[0].discovery_urls, std::vector<codec::UaString>{server->url()});
}

TEST(Discovery, GetEndpointsListsEveryEndpointWithCertificate)
{
    auto cfg = server_config("Srv", pki::TrustPolicy::strict());
    cfg.endpoints.erase(cfg.endpoints.begin() + 1);  // keep None and SignAndEncrypt
    auto server = Server::start(cfg);
    const auto eps = client::discover(server->url());
    ASSERT_EQ(eps.size(), 2u);
    EXPECT_EQ(eps[0].security_mode, MessageSecurityMode::None);
    EXPECT_EQ(eps[1].security_mode, MessageSecurityMode::SignAndEncrypt);
    EXPECT_EQ(eps[1].server_certificate, identity("Srv").certificate.der);
    EXPECT_EQ(eps[1].security_policy_uri, pu::Basic256Sha256);
    EXPECT_EQ(eps[1].user_identity_tokens.size(), 2u);
}

TEST(Discovery, SecureOnlyServerOffersNoNoneEndpoint)
{
    auto server = Server::start(server_config("Srv", pki::TrustPolicy::strict(), true, true, false));
    const auto eps = client::discover(server->url());
    ASSERT_EQ(eps.size(), 2u);
    for (const auto& e : eps) EXPECT_NE(e.security_mode, MessageSecurityMode::None);

    // The None channel still serves discovery but cannot carry a session.
    RawPeer peer(server->port());
    peer.hello();
    ASSERT_TRUE(peer.open_none());
    codec::CreateSessionRequest cs;
    cs.client_nonce = random_bytes(32);
    EXPECT_EQ(fault_status(peer.call(cs)), status::BadSecurityModeRejected);
}

TEST(Discovery, MalformedBodyYieldsDecodingFault)
{
    auto server = Server::start(server_config("Srv", pki::TrustPolicy::strict()));
    RawPeer peer(server->port());
    peer.hello();
    ASSERT_TRUE(peer.open_none());
    Bytes chunk = peer.message_chunk(codec::GetEndpointsRequest{});
    chunk.pop_back();
    codec::write_message_size(chunk, static_cast<std::uint32_t>(chunk.size()));
    EXPECT_EQ(fault_status(peer.call(chunk)), status::BadDecodingError);
    // the channel survives a bad body
    EXPECT_TRUE(std::holds_alternative<codec::GetEndpointsResponse>(peer.call(codec::GetEndpointsRequest{})));
}

TEST(Discovery, UnknownServiceIsUnsupported)
{
    auto server = Server::start(server_config("Srv", pki::TrustPolicy::strict()));
    RawPeer peer(server->port());
    peer.hello();
    ASSERT_TRUE(peer.open_none());
    codec::UnknownService browse{codec::NodeId::numeric(0, 527), codec::encode_to_bytes(codec::RequestHeader{})};
    EXPECT_EQ(fault_status(peer.call(browse)), status::BadServiceUnsupported);
}

TEST(Discovery, FirstMessageMustBeHello)
{
    auto server = Server::start(server_config("Srv", pki::TrustPolicy::strict()));
    RawPeer peer(server->port());
    const auto reply = peer.exchange(peer.none_open_chunk());
    const auto err = codec::decode_body(codec::MessageType::Error, codec::parse_chunk(reply).body);
    EXPECT_EQ(fault_status(err), status::BadTcpMessageTypeInvalid);
}

TEST(OpenSecureChannel, StrictRefusesUnknownClientWithUntrustedError)
{
    auto server = Server::start(server_config("Srv", pki::TrustPolicy::strict()));
    const auto e = client_error_of([&] { connect_secure(*server); });
    EXPECT_EQ(e.code(), ClientErrc::ProtocolError);
    EXPECT_EQ(e.status(), status::BadCertificateUntrusted);
    EXPECT_EQ(server->stats().secure_channels_opened, 0u);
    EXPECT_EQ(server->stats().channels_rejected, 1u);
}

TEST(OpenSecureChannel, StrictAcceptsProvisionedClient)
{
    auto cfg = server_config("Srv", pki::TrustPolicy::strict());
    cfg.trust_store->add_trusted(identity("Client").certificate);
    auto server = Server::start(cfg);
    auto session = connect_secure(*server);
    EXPECT_EQ(session.read(nodes::sensor()), codec::Variant(21.5));
    session.close();
    EXPECT_EQ(server->stats().secure_channels_opened, 1u);
}

TEST(OpenSecureChannel, PitfallProfilesAcceptUnknownClients)
{
    for (auto policy : {pki::TrustPolicy::accept_all(), pki::TrustPolicy::default_flag(true)}) {
        auto server = Server::start(server_config("Srv", policy));
        auto session = connect_secure(*server);
        EXPECT_EQ(session.read(nodes::status()), codec::Variant("RUNNING"));
        session.close();
        EXPECT_EQ(server->stats().secure_channels_opened, 1u) << pki::to_string(policy.kind);
    }
}

TEST(OpenSecureChannel, DefaultFlagOffBehavesLikeStrict)
{
    auto server = Server::start(server_config("Srv", pki::TrustPolicy::default_flag(false)));
    EXPECT_EQ(client_error_of([&] { connect_secure(*server); }).status(), status::BadCertificateUntrusted);
}

TEST(OpenSecureChannel, RejectedStorePersistsThenPromotionAdmits)
{
    const auto dir = temp_dir("rejected");
    auto cfg = server_config("Srv", pki::TrustPolicy::rejected_store());
    cfg.trust_store = std::make_shared<pki::TrustStore>(dir);
    auto server = Server::start(cfg);
    EXPECT_EQ(client_error_of([&] { connect_secure(*server); }).status(), status::BadCertificateUntrusted);
    const auto& client_cert = identity("Client").certificate;
    EXPECT_TRUE(std::filesystem::exists(dir / "rejected" / (pki::to_hex(client_cert.thumbprint) + ".der")));
    cfg.trust_store->promote_rejected(client_cert.thumbprint);
    auto session = connect_secure(*server);
    session.close();
    EXPECT_TRUE(cfg.trust_store->was_promoted(client_cert.thumbprint));
    std::filesystem::remove_all(dir);
}

TEST(OpenSecureChannel, UriThatDisagreesWithTheCertificateIsRefused)
{
    auto server = Server::start(server_config("Srv", pki::TrustPolicy::accept_all()));
    auto cfg = client_config("Client", pki::TrustPolicy::accept_all(), UserIdentity::user("operator", "secret"));
    cfg.application_uri = "urn:somebody:else";
    const auto e = client_error_of([&] { Session::connect(secure_endpoint(*server), cfg); });
    EXPECT_EQ(e.code(), ClientErrc::ServiceFault);
    EXPECT_EQ(e.status(), status::BadCertificateUriInvalid);
}

TEST(OpenSecureChannel, ConcurrentClientsGetDistinctChannels)
{
    auto server = Server::start(server_config("Srv", pki::TrustPolicy::accept_all()));
    const auto ep = secure_endpoint(*server);
    std::vector<std::optional<Session>> sessions(2);
    std::vector<std::thread> threads;
    for (int i = 0; i < 2; ++i)
        threads.emplace_back([&, i] {
            sessions[i] = Session::connect(ep, client_config(i ? "Client" : "Client2", pki::TrustPolicy::accept_all(),
                                                             UserIdentity::user("operator", "secret")));
        });
    for (auto& t : threads) t.join();
    ASSERT_TRUE(sessions[0] && sessions[1]);
    EXPECT_NE(sessions[0]->channel().state().channel_id, sessions[1]->channel().state().channel_id);
    EXPECT_EQ(sessions[0]->write(nodes::setpoint(), codec::Variant(1.0)), status::Good);
    EXPECT_EQ(sessions[1]->read(nodes::setpoint()), codec::Variant(1.0));
    for (auto& s : sessions) s->close();
}

TEST(OpenSecureChannel, ChannelHookSeesEstablishedKeys)
{
    auto cfg = server_config("Srv", pki::TrustPolicy::accept_all());
    std::mutex m;
    std::vector<std::pair<ChannelInfo, secchan::SecureChannelState>> seen;
    cfg.on_channel_open = [&](const ChannelInfo& c, const secchan::SecureChannelState& s) {
        std::lock_guard lock(m);
        seen.emplace_back(c, s);
    };
    auto server = Server::start(cfg);
    auto session = connect_secure(*server);
    std::lock_guard lock(m);
    ASSERT_EQ(seen.size(), 2u);  // discovery channel, then the secure one
    EXPECT_EQ(seen[1].first.mode, MessageSecurityMode::SignAndEncrypt);
    ASSERT_TRUE(seen[1].second.keys);
    const auto& client_state = session.channel().state();
    EXPECT_EQ(seen[1].second.keys->local.signing, client_state.keys->remote.signing);
    EXPECT_EQ(seen[1].second.keys->remote.encryption, client_state.keys->local.encryption);
    EXPECT_EQ(seen[1].first.client_certificate->der, identity("Client").certificate.der);
}

// Every (mode, policy) pair a client may ask for; only advertised pairs open a secure channel.
TEST(OpenSecureChannel, AcceptedPairsAreExactlyTheAdvertisedOnes)
{
    auto cfg = server_config("Srv", pki::TrustPolicy::accept_all());
    cfg.endpoints = {{"", MessageSecurityMode::SignAndEncrypt, std::string(pu::Basic256Sha256), tokens(true, false)}};
    auto server = Server::start(cfg);
    const auto& srv_cert = identity("Srv").certificate;
    const auto& me = identity("Client");

    const std::vector<std::string> policies = {std::string(pu::Basic256Sha256), std::string(pu::Basic256),
                                               std::string(pu::Basic128Rsa15), std::string(pu::Aes256Sha256RsaPss),
                                               "http://example.com/made-up"};
    for (auto mode : {MessageSecurityMode::Invalid, MessageSecurityMode::None, MessageSecurityMode::Sign,
                      MessageSecurityMode::SignAndEncrypt}) {
        for (const auto& policy : policies) {
            RawPeer peer(server->port());
            peer.hello();
            Bytes chunk;
            if (policy == pu::Basic256Sha256) {
                chunk = secure_open_chunk(me, srv_cert, mode, secchan::suite_basic256sha256());
            } else {
                // Unimplemented policies are judged from the header alone, so no protection is applied.
                codec::OpenSecureChannelRequest req;
                req.security_mode = mode;
                codec::ChannelFraming f;
                f.asymmetric.security_policy_uri = policy;
                f.asymmetric.sender_certificate = me.certificate.der;
                chunk = codec::encode_chunks(req, codec::HeaderKind::Asymmetric, &f, 1).front();
            }
            const auto reply = peer.exchange(chunk);
            const bool opened = codec::parse_message_header(reply).type == codec::MessageType::Open;
            const bool advertised = mode == MessageSecurityMode::SignAndEncrypt && policy == pu::Basic256Sha256;
            EXPECT_EQ(opened, advertised) << codec::to_string(mode) << " " << policy;
        }
    }
    // policy None opens only in mode None, and only for discovery
    for (auto mode : {MessageSecurityMode::Invalid, MessageSecurityMode::Sign, MessageSecurityMode::SignAndEncrypt}) {
        RawPeer peer(server->port());
        peer.hello();
        const auto reply = peer.exchange(peer.none_open_chunk(mode));
        EXPECT_EQ(codec::parse_message_header(reply).type, codec::MessageType::Error);
    }
    EXPECT_EQ(server->stats().secure_channels_opened, 1u);
}

// Adversarial sequences against an empty Strict trust list: nothing ever opens a secure channel.
TEST(OpenSecureChannel, StrictTrustGateHoldsForRandomMessageSequences)
{
    auto server = Server::start(server_config("Srv", pki::TrustPolicy::strict()));
    const auto& srv_cert = identity("Srv").certificate;
    const std::vector<const pki::Identity*> attackers = {&identity("Attacker"), &identity("Client")};
    const auto clone = pki::clone_certificate(srv_cert);  // even the server's own look-alike
    std::mt19937 rng(1234);
    int secure_opens_seen = 0;
    for (int round = 0; round < 40; ++round) {
        RawPeer peer(server->port());
        peer.stream().set_timeout(net::Millis(2000));
        try {
            if (rng() % 5) peer.hello();
            const int steps = 1 + static_cast<int>(rng() % 4);
            for (int s = 0; s < steps; ++s) {
                Bytes chunk;
                switch (rng() % 6) {
                case 0: chunk = secure_open_chunk(*attackers[rng() % 2], srv_cert, MessageSecurityMode::SignAndEncrypt,
                                                  secchan::suite_basic256sha256());
                    break;
                case 1: chunk = secure_open_chunk(clone, srv_cert, MessageSecurityMode::Sign,
                                                  secchan::suite_basic256sha256());
                    break;
                case 2: chunk = peer.none_open_chunk(); break;
                case 3: {
                    chunk = secure_open_chunk(*attackers[0], srv_cert, MessageSecurityMode::SignAndEncrypt,
                                              secchan::suite_basic256sha256());
                    chunk[8 + rng() % (chunk.size() - 8)] ^= static_cast<std::uint8_t>(1 + rng() % 255);
                    break;
                }
                case 4: chunk = peer.message_chunk(codec::CreateSessionRequest{}); break;
                default: {
                    chunk.resize(8 + rng() % 64);
                    for (auto& b : chunk) b = static_cast<std::uint8_t>(rng());
                    const char* tags[] = {"OPN", "MSG", "CLO"};
                    std::memcpy(chunk.data(), tags[rng() % 3], 3);
                    chunk[3] = 'F';
                    codec::write_message_size(chunk, static_cast<std::uint32_t>(chunk.size()));
                }
                }
                const auto reply = peer.exchange(chunk);
                if (codec::parse_message_header(reply).type == codec::MessageType::Open &&
                    peek_policy(reply) != pu::None)
                    ++secure_opens_seen;
            }
        } catch (const net::NetError&) {
            // the server closing on us is the expected outcome for most sequences
        } catch (const codec::CodecError&) {
        }
    }
    EXPECT_EQ(secure_opens_seen, 0);
    EXPECT_EQ(server->stats().secure_channels_opened, 0u);
}

TEST(OpenSecureChannel, DefaultFlagOffTranscriptsMatchStrict)
{
    auto run = [](pki::TrustPolicy policy) {
        auto cfg = server_config("Srv", policy);
        cfg.transcript = std::make_shared<net::Transcript>();
        auto server = Server::start(cfg);
        for (const char* who : {"Client", "Attacker"}) {
            RawPeer peer(server->port());
            peer.hello();
            try {
                peer.exchange(secure_open_chunk(identity(who), identity("Srv").certificate,
                                                MessageSecurityMode::SignAndEncrypt, secchan::suite_basic256sha256()));
                peer.read();
            } catch (const net::NetError&) {
            }
        }
        server->stop();
        return cfg.transcript->records();
    };
    const auto strict = run(pki::TrustPolicy::strict());
    const auto flag_off = run(pki::TrustPolicy::default_flag(false));
    ASSERT_EQ(strict.size(), flag_off.size());
    for (std::size_t i = 0; i < strict.size(); ++i) {
        EXPECT_EQ(strict[i].direction, flag_off[i].direction);
        if (strict[i].direction == net::Direction::Sent) EXPECT_EQ(strict[i].data, flag_off[i].data) << i;
        else EXPECT_EQ(strict[i].data.size(), flag_off[i].data.size()) << i;
    }
}

TEST(Sessions, CorrectPasswordActivates)
{
    auto server = Server::start(server_config("Srv", pki::TrustPolicy::accept_all()));
    auto s = connect_secure(*server);
    EXPECT_TRUE(s.handle().activated);
    EXPECT_EQ(server->stats().sessions_activated, 1u);
    EXPECT_EQ(s.handle().authentication_token.identifier.index(), 3u);  // opaque
    EXPECT_EQ(std::get<Bytes>(s.handle().authentication_token.identifier).size(), 32u);
    s.close();
}

TEST(Sessions, WrongPasswordIsDenied)
{
    auto server = Server::start(server_config("Srv", pki::TrustPolicy::accept_all()));
    const auto e = client_error_of([&] { connect_secure(*server, "Client", UserIdentity::user("operator", "guess")); });
    EXPECT_EQ(e.code(), ClientErrc::AuthFailed);
    EXPECT_EQ(e.status(), status::BadUserAccessDenied);
    const auto u = client_error_of([&] { connect_secure(*server, "Client", UserIdentity::user("nobody", "secret")); });
    EXPECT_EQ(u.status(), status::BadUserAccessDenied);
}

TEST(Sessions, AnonymousOnlyWhenAllowed)
{
    auto cfg = server_config("Srv", pki::TrustPolicy::accept_all());
    cfg.anonymous_allowed = false;
    auto server = Server::start(cfg);
    const auto e = client_error_of([&] { connect_secure(*server, "Client", UserIdentity::anonymous()); });
    EXPECT_EQ(e.code(), ClientErrc::AuthFailed);
    EXPECT_EQ(e.status(), status::BadIdentityTokenRejected);

    auto open_server = Server::start(server_config("Srv", pki::TrustPolicy::accept_all()));
    auto s = connect_secure(*open_server, "Client", UserIdentity::anonymous());
    EXPECT_TRUE(s.handle().activated);
    s.close();
}

TEST(Sessions, UserNameOverNoneWorksEncryptedOrPlain)
{
    auto server = Server::start(server_config("Srv", pki::TrustPolicy::strict()));
    const auto none = endpoint_with(client::discover(server->url()), MessageSecurityMode::None);
    for (bool encrypt : {true, false}) {
        auto cfg = client_config("Client", pki::TrustPolicy::strict(), UserIdentity::user("operator", "secret"));
        cfg.encrypt_token_under_none = encrypt;
        auto s = Session::connect(none, cfg);
        EXPECT_EQ(s.read(nodes::sensor()), codec::Variant(21.5));
        s.close();
    }
}

TEST(Sessions, EncryptedTokenWithWrongNonceIsInvalid)
{
    // over None there is no application signature, so only the token nonce is stale
    auto server = Server::start(server_config("Srv", pki::TrustPolicy::accept_all()));
    const auto ep = endpoint_with(client::discover(server->url()), MessageSecurityMode::None);
    auto ch = client::Channel::dial(ep.endpoint_url.value(), {});
    ch.open(ep.security_mode, ep.security_policy_uri.value(), std::nullopt, std::nullopt);
    client::SessionRequestInfo info{"urn:x", "c", ep.endpoint_url.value(), "s"};
    auto handle = client::create_session(ch, info, std::nullopt);
    ASSERT_TRUE(handle.server_certificate);
    const Bytes real_nonce = handle.server_nonce;
    handle.server_nonce = random_bytes(32);
    const auto e = client_error_of(
        [&] { client::activate_session(ch, handle, ep, UserIdentity::user("operator", "secret"), std::nullopt); });
    EXPECT_EQ(e.status(), status::BadNonceInvalid);
    handle.server_nonce = real_nonce;
    client::activate_session(ch, handle, ep, UserIdentity::user("operator", "secret"), std::nullopt);
    EXPECT_TRUE(handle.activated);
}

TEST(Sessions, StolenButValidCredentialsActivate)
{
    // the server cannot tell an attacker presenting captured credentials from the real operator
    auto server = Server::start(server_config("Srv", pki::TrustPolicy::accept_all()));
    auto s = connect_secure(*server, "Attacker");
    EXPECT_TRUE(s.handle().activated);
    s.close();
}

TEST(Sessions, ReadAndWriteRequireAnActivatedSession)
{
    auto server = Server::start(server_config("Srv", pki::TrustPolicy::accept_all()));
    const auto ep = secure_endpoint(*server);
    const auto& me = identity("Client");
    auto ch = client::Channel::dial(ep.endpoint_url.value(), {});
    ch.open(ep.security_mode, ep.security_policy_uri.value(), me, identity("Srv").certificate);
    client::SessionRequestInfo info{me.certificate.application_uri, "c", ep.endpoint_url.value(), "s"};
    auto handle = client::create_session(ch, info, me);

    codec::ReadRequest read;
    read.nodes_to_read.push_back({nodes::sensor(), codec::kAttributeValue, {}, {}});
    codec::WriteRequest write;
    write.nodes_to_write.push_back({nodes::setpoint(), codec::kAttributeValue, {}, {codec::Variant(9.0)}});
    EXPECT_EQ(fault_status(ch.call(read, handle.authentication_token)), status::BadSessionNotActivated);
    EXPECT_EQ(fault_status(ch.call(write, handle.authentication_token)), status::BadSessionNotActivated);
    EXPECT_EQ(fault_status(ch.call(read, codec::NodeId::opaque(0, random_bytes(32)))), status::BadSessionIdInvalid);
    EXPECT_EQ(fault_status(ch.call(read)), status::BadSessionIdInvalid);
    EXPECT_EQ(server->stats().reads, 0u);
    EXPECT_EQ(server->config().nodes->read(nodes::setpoint()).value, codec::Variant(50.0));

    EXPECT_THROW(client::activate_session(ch, handle, ep, UserIdentity::user("operator", "wrong"), me),
                 client::ClientError);
    EXPECT_EQ(fault_status(ch.call(read, handle.authentication_token)), status::BadSessionNotActivated);
    client::activate_session(ch, handle, ep, UserIdentity::user("operator", "secret"), me);
    EXPECT_TRUE(std::holds_alternative<codec::ReadResponse>(ch.call(read, handle.authentication_token)));
}

// Random interleavings of session operations: a Read/Write response implies a prior successful activation.
TEST(Sessions, GatingHoldsForRandomOperationOrders)
{
    auto server = Server::start(server_config("Srv", pki::TrustPolicy::accept_all(), false, true));
    const auto ep = secure_endpoint(*server);
    const auto& me = identity("Client");
    std::mt19937 rng(99);
    for (int round = 0; round < 12; ++round) {
        auto ch = client::Channel::dial(ep.endpoint_url.value(), {});
        ch.open(ep.security_mode, ep.security_policy_uri.value(), me, identity("Srv").certificate);
        client::SessionRequestInfo info{me.certificate.application_uri, "c", ep.endpoint_url.value(), "s"};
        std::optional<client::SessionHandle> handle;
        bool activated = false;
        for (int step = 0; step < 8; ++step) {
            const auto token = handle ? handle->authentication_token : codec::NodeId{};
            switch (rng() % 5) {
            case 0: handle = client::create_session(ch, info, me); activated = false; break;
            case 1:
                if (handle) {
                    try {
                        client::activate_session(ch, *handle, ep, UserIdentity::user("operator", rng() % 2 ? "secret" : "x"), me);
                        activated = true;
                    } catch (const client::ClientError&) {
                    }
                }
                break;
            case 2: {
                codec::ReadRequest r;
                r.nodes_to_read.push_back({nodes::sensor(), codec::kAttributeValue, {}, {}});
                const bool got = std::holds_alternative<codec::ReadResponse>(ch.call(r, token));
                EXPECT_EQ(got, activated);
                break;
            }
            case 3: {
                codec::WriteRequest w;
                w.nodes_to_write.push_back({nodes::setpoint(), codec::kAttributeValue, {}, {codec::Variant(1.0)}});
                const bool got = std::holds_alternative<codec::WriteResponse>(ch.call(w, token));
                EXPECT_EQ(got, activated);
                break;
            }
            default:
                if (handle) {
                    ch.call(codec::CloseSessionRequest{}, token);
                    handle.reset();
                    activated = false;
                }
            }
        }
        ch.close();
    }
}

TEST(NodeService, ReadsSeededValuesAndFaultsUnknownNodes)
{
    auto server = Server::start(server_config("Srv", pki::TrustPolicy::accept_all()));
    auto s = connect_secure(*server);
    EXPECT_EQ(s.read(nodes::sensor()), codec::Variant(21.5));
    EXPECT_EQ(s.read(nodes::setpoint()), codec::Variant(50.0));
    EXPECT_EQ(s.read(nodes::status()), codec::Variant("RUNNING"));
    const auto dv = s.read_data_value(codec::NodeId::string(1, "nope"));
    EXPECT_FALSE(dv.value);
    EXPECT_EQ(dv.status, status::BadNodeIdUnknown);
    EXPECT_EQ(client_error_of([&] { s.read(codec::NodeId::numeric(0, 1)); }).status(), status::BadNodeIdUnknown);
    s.close();
}

TEST(NodeService, WritesOnlyWritableNodesOfTheRightType)
{
    auto server = Server::start(server_config("Srv", pki::TrustPolicy::accept_all()));
    auto s = connect_secure(*server);
    EXPECT_EQ(s.write(nodes::setpoint(), codec::Variant(42.0)), status::Good);
    EXPECT_EQ(s.read(nodes::setpoint()), codec::Variant(42.0));
    EXPECT_EQ(s.write(nodes::sensor(), codec::Variant(0.0)), status::BadNotWritable);
    EXPECT_EQ(s.read(nodes::sensor()), codec::Variant(21.5));
    EXPECT_EQ(s.write(nodes::setpoint(), codec::Variant("high")), status::BadTypeMismatch);
    EXPECT_EQ(s.write(codec::NodeId::string(1, "nope"), codec::Variant(1.0)), status::BadNodeIdUnknown);
    EXPECT_EQ(server->config().nodes->read(nodes::setpoint()).value, codec::Variant(42.0));
    s.close();
}

TEST(NodeService, InterceptorCanReplaceReads)
{
    auto cfg = server_config("Srv", pki::TrustPolicy::accept_all());
    cfg.intercept = [](ServiceCall& call) -> std::optional<codec::ServiceBody> {
        auto* r = std::get_if<codec::ReadRequest>(&call.request);
        if (!r || !call.session) return std::nullopt;
        codec::ReadResponse resp;
        resp.response_header.request_handle = r->request_header.request_handle;
        for (std::size_t i = 0; i < r->nodes_to_read.size(); ++i) resp.results.push_back({codec::Variant(-1.0)});
        return resp;
    };
    auto server = Server::start(cfg);
    auto s = connect_secure(*server);
    EXPECT_EQ(s.read(nodes::sensor()), codec::Variant(-1.0));
    EXPECT_EQ(s.write(nodes::setpoint(), codec::Variant(3.0)), status::Good);  // not intercepted
    s.close();
}

TEST(NodeStoreUnit, ConcurrentWritesAreEachIndivisible)
{
    NodeStore store(default_nodes());
    std::vector<std::thread> ts;
    for (int t = 0; t < 4; ++t)
        ts.emplace_back([&, t] {
            for (int i = 0; i < 500; ++i) store.write(nodes::setpoint(), codec::Variant(static_cast<double>(t)));
        });
    for (auto& t : ts) t.join();
    const auto v = store.read(nodes::setpoint()).value->get_if<double>();
    ASSERT_TRUE(v);
    EXPECT_TRUE(*v >= 0.0 && *v <= 3.0);
}
