use super::*;

fn p(s: &str) -> Process {
    parse(s).unwrap_or_else(|e| panic!("{s}: {e}"))
}

fn n(s: &str) -> Name {
    Name::new(s)
}

#[test]
fn inaction_and_atoms() {
    assert_eq!(p("0"), Process::nil());
    assert_eq!(p("x!y"), Process::out("x", "y"));
    assert_eq!(p("x!y.0"), Process::output("x", "y", Process::nil()));
    assert_eq!(p("x?(y)"), Process::input("x", "y", Process::nil()));
    assert_eq!(p("tau.0"), Process::tau(Process::nil()));
}

#[test]
fn numeral_channels_and_announcements() {
    assert_eq!(p("o!0"), Process::out("o", "0"));
    assert_eq!(p("3!x"), Process::out("3", "x"));
}

#[test]
fn precedence() {
    // `|` is loosest, then `+`, prefixes bind tightest
    let t = p("a!b.0 + c?(d).0 | e!f");
    match t {
        Process::Par(l, r) => {
            assert!(matches!(*l, Process::Sum(ref bs) if bs.len() == 2));
            assert_eq!(*r, Process::out("e", "f"));
        }
        other => panic!("{other:?}"),
    }
    let t = p("new x. x!y | z!x");
    assert!(matches!(t, Process::Par(..)), "new binds tightly: {t}");
    let t = p("!a?(b).b!b | c!c");
    assert!(matches!(t, Process::Par(ref l, _) if matches!(**l, Process::Rep(_))));
}

#[test]
fn bound_output_sugar_in_sums_is_hoisted() {
    let t = p("x_0!(y).o!0 + x_1?(y).o!1");
    match &t {
        Process::New(y, body) => match &**body {
            Process::Sum(bs) => {
                assert_eq!(bs.len(), 2);
                assert_eq!(bs[0].0, Prefix::Output { channel: n("x_0"), datum: y.clone() });
                assert!(matches!(bs[1].0, Prefix::Input { .. }));
            }
            other => panic!("{other:?}"),
        },
        other => panic!("{other:?}"),
    }
    assert_eq!(free_names(&t), ["x_0", "x_1", "o", "0", "1"].iter().map(|s| n(s)).collect());
}

#[test]
fn hoisting_renames_binders_that_would_capture() {
    let t = p("a!(y).0 + b!y.0");
    let fns = free_names(&t);
    assert!(fns.contains(&n("y")), "sibling's free y must stay free: {t}");
    assert!(fns.contains(&n("a")) && fns.contains(&n("b")));
    let t = p("new a. new a. x!a.0 + b?(z).0");
    assert_eq!(free_names(&t), [n("x"), n("b")].into_iter().collect());
    match &t {
        Process::New(_, inner) => match &**inner {
            Process::New(_, body) => match &**body {
                Process::Sum(bs) => match &bs[0].0 {
                    // the datum must be the innermost binder
                    Prefix::Output { datum, .. } => {
                        let Process::New(outer, _) = &t else { unreachable!() };
                        let Process::New(innermost, _) = &**inner else { unreachable!() };
                        assert!(datum == innermost || datum == outer);
                    }
                    other => panic!("{other:?}"),
                },
                other => panic!("{other:?}"),
            },
            other => panic!("{other:?}"),
        },
        other => panic!("{other:?}"),
    }
}

#[test]
fn sum_operands_must_be_guarded() {
    assert!(parse("a!b.0 + (c!d | e!f)").is_err());
    assert!(parse("a!b.0 + !c!d").is_err());
}

#[test]
fn reserved_binders_rejected() {
    for s in ["new o. 0", "x?(o).0", "new 3. 0", "x?(0).0", "x!(1).0"] {
        let err = parse(s).unwrap_err();
        assert!(err.message.contains("reserved"), "{s}: {err}");
    }
}

#[test]
fn canonical_names_only_under_their_binder() {
    assert!(parse("new #0. #0!a").is_ok());
    assert!(parse("#0!a").is_err());
    assert!(parse("x!#h1").is_err());
}

#[test]
fn errors_carry_positions() {
    let err = parse("a!b |\n  c?(d).").unwrap_err();
    assert_eq!(err.line, 2);
    let err = parse("a!b $").unwrap_err();
    assert_eq!((err.line, err.column), (1, 5));
    assert!(parse("(a!b").is_err());
    assert!(parse("a b").is_err());
    assert!(parse("").is_err());
}

#[test]
fn deep_nesting_is_an_error_not_a_crash() {
    let s = "(".repeat(5000) + "0" + &")".repeat(5000);
    assert!(parse(&s).is_err());
}

#[test]
fn print_parse_roundtrip() {
    for s in [
        "0",
        "x!y",
        "x?(y).y!y.0",
        "a!b.0 + c?(d).d!d.0 + tau.0",
        "new x. (x!y | x?(z).0)",
        "!(a?(b).0 | c!d)",
        "(a!b | c!d) | e!f",
        "a?(b).(b!b | b?(c).0)",
        "a?(b).(c!d.0 + e!f.0)",
        "x_0!(y).o!0 + x_1?(y).o!1",
    ] {
        let t = p(s);
        let printed = t.to_string();
        let back = p(&printed);
        assert!(alpha_equiv(&t, &back), "{s} -> {printed}");
    }
}

#[test]
fn free_names_follow_scoping() {
    assert!(free_names(&Process::nil()).is_empty());
    assert_eq!(free_names(&p("new x. x!y")), [n("y")].into_iter().collect());
    assert_eq!(free_names(&p("a?(b).b!c")), [n("a"), n("c")].into_iter().collect());
    assert_eq!(free_names_ordered(&p("c!a | a!b")), vec![n("c"), n("a"), n("b")]);
}

#[test]
fn substitution_avoids_capture() {
    assert_eq!(substitute(&p("x!x"), &n("x"), &n("y")), p("y!y"));
    let t = substitute(&p("new y. x!y"), &n("x"), &n("y"));
    match &t {
        Process::New(b, body) => {
            assert_ne!(*b, n("y"));
            assert_eq!(**body, Process::out(n("y"), b.clone()));
        }
        other => panic!("{other:?}"),
    }
    // shadowed occurrences are untouched
    assert_eq!(substitute(&p("a?(x).x!x"), &n("x"), &n("z")), p("a?(x).x!x"));
}

#[test]
fn alpha_equivalence() {
    assert!(alpha_equiv(&p("new x. z!x"), &p("new y. z!y")));
    assert!(alpha_equiv(&p("x?(u).u!u"), &p("x?(v).v!v")));
    assert!(!alpha_equiv(&p("x!y"), &p("y!x")));
    assert!(!alpha_equiv(&p("new x. x!z"), &p("new x. z!x")));
}

#[test]
fn renaming_of_the_two_node_election() {
    let p0 = p("x_0!(y).o!0 + x_1?(y).o!1");
    let p1 = p("x_1!(y).o!1 + x_0?(y).o!0");
    let sigma = Renaming::from_pairs([("x_0", "x_1"), ("x_1", "x_0"), ("0", "1"), ("1", "0")]);
    let image = apply_renaming(&sigma, &p0).unwrap();
    assert!(alpha_equiv(&image, &p1), "{image}");
    assert!(apply_renaming(&Renaming::identity(), &p0).map(|q| alpha_equiv(&q, &p0)).unwrap());
}

#[test]
fn renaming_must_be_injective_on_free_names() {
    let sigma = Renaming::from_pairs([("a", "c"), ("b", "c")]);
    assert!(matches!(apply_renaming(&sigma, &p("a!b")), Err(RenamingError::NotInjective(..))));
    // not injective overall, but injective on fn
    assert!(apply_renaming(&sigma, &p("a!a")).is_ok());
}

#[test]
fn renaming_refreshes_binders() {
    let sigma = Renaming::from_pairs([("a", "b")]);
    let t = apply_renaming(&sigma, &p("new b. a!b")).unwrap();
    assert_eq!(free_names(&t), [n("b")].into_iter().collect());
}

#[test]
fn composition() {
    let s1 = Renaming::from_pairs([("a", "b"), ("b", "c")]);
    let s2 = Renaming::from_pairs([("c", "a")]);
    let c = s2.compose(&s1);
    assert_eq!(c.apply(&n("a")), n("b"));
    assert_eq!(c.apply(&n("b")), n("a"));
    assert_eq!(c.apply(&n("c")), n("a"));
}

#[test]
fn congruence_rules() {
    // commutativity and associativity
    assert!(struct_congruent(&p("a!b | c!d"), &p("c!d | a!b")));
    assert!(struct_congruent(&p("(a!b | c!d) | e!f"), &p("a!b | (c!d | e!f)")));
    // scope extension
    assert!(struct_congruent(&p("(new x. x!a) | q!r"), &p("new x. (x!a | q!r)")));
    assert!(struct_congruent(&p("q!r | new x. x!a"), &p("new y. (y!a | q!r)")));
    // alpha
    assert!(struct_congruent(&p("new x. x!x"), &p("new y. y!y")));
    // replication is not unfolded
    assert!(!struct_congruent(&p("!a!b"), &p("a!b | !a!b")));
    // no garbage collection of 0 under the exact rules
    assert!(!struct_congruent(&p("a!b | 0"), &p("a!b")));
    assert_eq!(reduced_normal_form(&p("a!b | 0 | new z. 0")), reduced_normal_form(&p("a!b")));
    // order of sum branches matters for the congruence but not for symmetry
    assert!(!struct_congruent(&p("a!b.0 + c!d.0"), &p("c!d.0 + a!b.0")));
    assert_eq!(symmetry_key(&p("a!b.0 + c!d.0")), symmetry_key(&p("c!d.0 + a!b.0")));
}

#[test]
fn binder_ties_are_resolved_consistently() {
    let a = p("new x. new y. (x!a | y!a | x?(z).y!z.0)");
    let b = p("new y. new x. (y?(z).x!z.0 | x!a | y!a)");
    assert!(struct_congruent(&a, &b));
    let c = p("new x. new y. (x!a | y!a | y?(z).x!z.0)");
    assert_eq!(normal_form(&c), normal_form(&normal_form(&c)));
}

#[test]
fn normal_form_is_idempotent_and_keeps_free_names() {
    for s in [
        "new x. (x!a | new y. (y!x | b?(c).c!y.0))",
        "!(new k. k!k) | a?(b).new c. b!c",
        "a!b.0 + new q. c!q.0",
        "0 | 0 | new u. 0",
    ] {
        let t = p(s);
        let nf = normal_form(&t);
        assert_eq!(normal_form(&nf), nf, "{s}");
        assert_eq!(free_names(&nf), free_names(&t), "{s}");
        assert!(struct_congruent(&t, &nf));
    }
}

#[test]
fn network_text() {
    let net = parse_network_text(
        "%ids 0\n%hoisted y\n// two nodes\nx_0!(y).o!0 + x_1?(y).o!1\n||\nx_1!(y).o!1 + x_0?(y).o!0\n",
    )
    .unwrap();
    assert_eq!(net.components.len(), 2);
    assert_eq!(net.hoisted, vec![n("y")]);
    assert_eq!(net.id_base, Some(0));
    let err = parse_network_text("a!b ||\n%bogus\nc!d").unwrap_err();
    assert_eq!(err.line, 2);
    assert!(parse_network_text("a!b || ").is_err());
}

#[test]
fn shape_ignores_names() {
    assert_eq!(p("a!b | c?(d).0").shape(), p("x!y | z?(w).0").shape());
    assert_ne!(p("a!b").shape(), p("a!b.0").shape());
}
