use nifs_atlas::certify::{
    build_default_certificate, pushforward_certificate, verify_certificate, ThinnessCertificate, Verdict, WordRule,
};
use nifs_atlas::families::{cantor, cantor_stage, gapped, SeedMode};
use nifs_atlas::seqlang::SeqRule;

#[test]
fn slowly_shrinking_cantor_certifies_past_the_degenerate_stages() {
    let sys = cantor(2, &SeqRule::expr("1/(j+2)").unwrap(), SeedMode::Disk, 30).unwrap();
    let subseq: Vec<usize> = (1..=30).collect();
    let cert = build_default_certificate(&sys, &subseq, &WordRule::Smallest).unwrap();
    assert_eq!(cert.verdict, Verdict::Certified);
    assert!(cert.entries.len() >= 3);
    assert!(cert.dropped.iter().all(|d| d.reason.contains("degenerate")));
    assert!(verify_certificate(&sys, &cert).valid);
}

#[test]
fn gapped_certificate_verifies_and_round_trips() {
    let sys = gapped(&SeqRule::expr("j").unwrap(), SeedMode::Disk, 10).unwrap();
    let cert = build_default_certificate(&sys, &(1..=10).collect::<Vec<_>>(), &WordRule::Smallest).unwrap();
    assert_eq!(cert.verdict, Verdict::Certified);
    let v = verify_certificate(&sys, &cert);
    assert!(v.valid, "{:?}", v.first_failure());
    let back = ThinnessCertificate::from_json(&cert.to_json()).unwrap();
    assert_eq!(back, cert);
    assert!(verify_certificate(&sys, &back).valid);
}

#[test]
fn certificate_pushes_through_a_prepended_stage() {
    let sys = gapped(&SeqRule::expr("j").unwrap(), SeedMode::Disk, 8).unwrap();
    let cert = build_default_certificate(&sys, &(1..=8).collect::<Vec<_>>(), &WordRule::Smallest).unwrap();
    let extended = sys.prepend_stage(cantor_stage(2, 0.25).unwrap()).unwrap();
    let pushed = pushforward_certificate(&extended, &cert, 2).unwrap();
    assert_eq!(pushed.verdict, Verdict::Certified);
    assert_eq!(pushed.word[0], 2);
    assert!(pushed.entries.iter().zip(&cert.entries).all(|(p, e)| p.stage == e.stage + 1));
    assert!(verify_certificate(&extended, &pushed).valid);
}

#[test]
fn certificate_for_another_system_is_rejected() {
    let sys = gapped(&SeqRule::expr("j").unwrap(), SeedMode::Disk, 6).unwrap();
    let cert = build_default_certificate(&sys, &(1..=6).collect::<Vec<_>>(), &WordRule::Smallest).unwrap();
    let other = cantor(2, &SeqRule::Constant(0.2), SeedMode::Disk, 6).unwrap();
    assert!(!verify_certificate(&other, &cert).valid);
}
