import math

import numpy as np
import pytest
import torch

from ir2mol.spectra import ABSORBANCE, Spectrum, WavenumberGrid
from ir2mol.translator import (
    BOS_ID,
    EOS_ID,
    PAD_ID,
    UNK_ID,
    ModelError,
    TokenVocabulary,
    TrainingConfig,
    TrainingError,
    TranslatorConfig,
    TranslatorModel,
    batch_from_token_lists,
    ce_loss,
    load_checkpoint,
    lr_multiplier,
    save_checkpoint,
    spectrum_tensor,
    token_accuracy,
    tokenize_smiles,
    train,
    validation_bleu,
)
from ir2mol.translator.vocab import RESERVED, VocabularyError


def micro_config(vocab_size=12, L=16, seed=0, max_target_len=8):
    return TranslatorConfig(
        vocab_size=vocab_size, spectrum_len=L, d=8, heads=1,
        encoder_layers=1, decoder_layers=1, ffn_mult=2,
        max_target_len=max_target_len, beam_width=3, seed=seed,
    )


def micro_spectrum(L=16, seed=0):
    rng = np.random.RandomState(seed)
    grid = WavenumberGrid(500.0, 4000.0, L)
    return Spectrum(grid=grid, values=np.abs(rng.randn(L)), mode=ABSORBANCE, id=f"m{seed}")


class TestVocabulary:
    def test_reserved_indices(self):
        v = TokenVocabulary.from_corpus(["CCO"])
        assert v.tokens[:4] == RESERVED
        assert (BOS_ID, EOS_ID, PAD_ID, UNK_ID) == (0, 1, 2, 3)

    def test_two_char_merging(self):
        assert tokenize_smiles("CClBr(=O)") == ["C", "Cl", "Br", "(", "=", "O", ")"]

    def test_encode_decode_round_trip(self):
        v = TokenVocabulary.from_corpus(["CCO", "CClBr", "c1ccccc1"])
        for s in ("CCO", "c1cc1", "ClBr"):
            assert v.decode(v.encode(s)) == s

    def test_unknown_tokens_map_to_unk(self):
        v = TokenVocabulary.from_corpus(["CC"])
        ids = v.encode("CN")
        assert ids[2] == UNK_ID

    def test_duplicates_rejected(self):
        with pytest.raises(VocabularyError):
            TokenVocabulary(tokens=RESERVED + ("C", "C"))

    def test_reserved_prefix_required(self):
        with pytest.raises(VocabularyError):
            TokenVocabulary(tokens=("C", "N") + RESERVED)


class TestEncodeInput:
    def test_matches_straight_line_reference(self):
        cfg = micro_config()
        model = TranslatorModel(cfg).double()
        s = micro_spectrum()
        out = model.encode_input(spectrum_tensor(s, dtype=torch.float64))
        w = model.input_proj.weight.detach().numpy()  # (d, 1)
        b = model.input_proj.bias.detach().numpy()
        P = model.spectrum_pos.detach().numpy()
        ref = np.stack([w[:, 0] * v + b + P[i] for i, v in enumerate(s.values)])
        assert np.max(np.abs(out.detach().numpy()[0] - ref)) <= 1e-12

    def test_zero_positional_table_gives_projection(self):
        cfg = micro_config()
        model = TranslatorModel(cfg).double()
        with torch.no_grad():
            model.spectrum_pos.zero_()
        s = micro_spectrum()
        out = model.encode_input(spectrum_tensor(s, dtype=torch.float64))[0]
        w = model.input_proj.weight.detach()[:, 0]
        b = model.input_proj.bias.detach()
        for i, v in enumerate(s.values):
            assert torch.allclose(out[i], w * v + b, atol=1e-15)

    def test_zero_projection_gives_positional_rows(self):
        cfg = micro_config()
        model = TranslatorModel(cfg).double()
        with torch.no_grad():
            model.input_proj.weight.zero_()
            model.input_proj.bias.zero_()
        s = micro_spectrum()
        out = model.encode_input(spectrum_tensor(s, dtype=torch.float64))[0]
        assert torch.equal(out, model.spectrum_pos.detach())

    def test_length_mismatch_rejected(self):
        model = TranslatorModel(micro_config(L=16))
        with pytest.raises(ModelError, match="length"):
            model.encode_input(torch.zeros(10))


class TestCeLoss:
    def test_uniform_logits_give_log_vocab(self):
        V = 12
        logits = torch.zeros(1, 1, V, dtype=torch.float64)
        targets = torch.tensor([[5]])
        assert float(ce_loss(logits, targets)) == pytest.approx(math.log(V), abs=1e-12)

    def test_certain_prediction_gives_zero(self):
        logits = torch.full((1, 1, 3), -1000.0, dtype=torch.float64)
        logits[0, 0, 1] = 1000.0
        targets = torch.tensor([[1]])
        assert float(ce_loss(logits, targets)) == 0.0

    def test_matches_numpy_oracle(self):
        rng = np.random.RandomState(0)
        B, T, V = 3, 5, 7
        logits = rng.randn(B, T, V)
        targets = rng.randint(0, V, size=(B, T))
        targets[0, 3:] = PAD_ID
        targets[2, 1:] = PAD_ID

        # independent straight-line reference: per-example sums, batch mean
        total = 0.0
        for b in range(B):
            example = 0.0
            for t in range(T):
                if targets[b, t] == PAD_ID:
                    continue
                row = logits[b, t]
                logz = math.log(np.exp(row - row.max()).sum()) + row.max()
                example += logz - row[targets[b, t]]
            total += example
        expected = total / B

        got = float(ce_loss(torch.tensor(logits), torch.tensor(targets)))
        assert got == pytest.approx(expected, abs=1e-10)

    def test_empty_batch_rejected(self):
        with pytest.raises(ModelError, match="empty"):
            ce_loss(torch.zeros(0, 1, 5), torch.zeros(0, 1, dtype=torch.long))


class TestModelProperties:
    def test_attention_rows_stochastic(self):
        cfg = micro_config()
        model = TranslatorModel(cfg).double()
        s = micro_spectrum()
        tokens = torch.tensor([[BOS_ID, 4, 5, 6]])
        model(spectrum_tensor(s, dtype=torch.float64).unsqueeze(0), tokens)
        attns = []
        for layer in model.encoder_layers:
            attns.append(layer.attn.last_weights)
        for layer in model.decoder_layers:
            attns.append(layer.self_attn.last_weights)
            attns.append(layer.cross_attn.last_weights)
        for w in attns:
            sums = w.sum(dim=-1)
            assert torch.max(torch.abs(sums - 1.0)) <= 1e-9
            assert torch.min(w) >= 0.0

    def test_causality_exact_zero(self):
        cfg = micro_config()
        model = TranslatorModel(cfg).double()
        s = micro_spectrum()
        values = spectrum_tensor(s, dtype=torch.float64).unsqueeze(0)
        base = torch.tensor([[BOS_ID, 4, 5, 6, 7]])
        with torch.no_grad():
            out1 = model(values, base)
            for t in range(1, base.shape[1]):
                perturbed = base.clone()
                perturbed[0, t] = 8
                out2 = model(values, perturbed)
                diff = (out1[0, :t] - out2[0, :t]).abs().max()
                assert float(diff) == 0.0

    def test_deterministic_init(self):
        m1 = TranslatorModel(micro_config(seed=3))
        m2 = TranslatorModel(micro_config(seed=3))
        for p1, p2 in zip(m1.parameters(), m2.parameters()):
            assert torch.equal(p1, p2)
        m3 = TranslatorModel(micro_config(seed=4))
        assert any(
            not torch.equal(p1, p3)
            for p1, p3 in zip(m1.parameters(), m3.parameters())
        )

    def test_config_validation(self):
        with pytest.raises(ModelError, match="divisible"):
            TranslatorConfig(vocab_size=10, spectrum_len=8, d=10, heads=3)
        with pytest.raises(ModelError, match="positive"):
            TranslatorConfig(vocab_size=10, spectrum_len=8, d=8, heads=1,
                             beam_width=0)


class TestGradients:
    def test_sampled_finite_difference_check(self):
        torch.set_num_threads(1)
        cfg = micro_config(vocab_size=12, L=16)
        model = TranslatorModel(cfg).double()
        rng = np.random.RandomState(0)
        values = torch.tensor(rng.rand(2, 16), dtype=torch.float64)
        token_lists = [
            [BOS_ID, 4, 5, 6, EOS_ID],
            [BOS_ID, 7, 8, EOS_ID],
        ]
        inputs, targets = batch_from_token_lists(token_lists)

        def loss_value():
            with torch.no_grad():
                return float(ce_loss(model(values, inputs), targets))

        loss = ce_loss(model(values, inputs), targets)
        model.zero_grad()
        loss.backward()

        h = 1e-5
        checked = 0
        bad = 0
        params = [p for p in model.parameters() if p.requires_grad]
        for p in params:
            flat = p.data.view(-1)
            grad = p.grad.view(-1)
            idx = rng.choice(flat.numel(), size=min(8, flat.numel()), replace=False)
            for i in idx:
                orig = float(flat[i])
                flat[i] = orig + h
                up = loss_value()
                flat[i] = orig - h
                down = loss_value()
                flat[i] = orig
                numeric = (up - down) / (2 * h)
                analytic = float(grad[i])
                rel = abs(analytic - numeric) / max(abs(analytic), abs(numeric), 1e-6)
                checked += 1
                if rel > 1e-4:
                    bad += 1
                assert rel <= 1e-3, f"rel error {rel} at sampled coordinate"
        assert checked >= 100
        assert bad / checked <= 0.01


class TestSchedule:
    def test_warmup_ramp(self):
        assert lr_multiplier(0, 8000, "inverse_sqrt") == 0.0
        assert lr_multiplier(4000, 8000, "inverse_sqrt") == 0.5
        assert lr_multiplier(8000, 8000, "inverse_sqrt") == 1.0

    def test_continuous_at_boundary(self):
        before = lr_multiplier(7999, 8000, "inverse_sqrt")
        at = lr_multiplier(8000, 8000, "inverse_sqrt")
        after = lr_multiplier(8001, 8000, "inverse_sqrt")
        assert before < at and abs(after - at) < 1e-4
        lin_after = lr_multiplier(8001, 8000, "linear", total_steps=16000)
        assert abs(lin_after - 1.0) < 1e-3

    def test_inverse_sqrt_decay(self):
        assert lr_multiplier(32000, 8000, "inverse_sqrt") == pytest.approx(0.5)

    def test_linear_decay_to_zero(self):
        assert lr_multiplier(16000, 8000, "linear", total_steps=16000) == 0.0
        assert lr_multiplier(12000, 8000, "linear", total_steps=16000) == pytest.approx(0.5)


def tiny_dataset(vocab_pool, n, L=16, seed=0, prefix="d"):
    """Each molecule gets a fixed spectral signature plus small noise."""
    rng = np.random.RandomState(seed)
    grid = WavenumberGrid(500.0, 4000.0, L)
    data = []
    for i in range(n):
        m = i % len(vocab_pool)
        smiles = vocab_pool[m]
        values = np.full(L, 0.05)
        values[(3 * m) % L] = 2.0
        values[(3 * m + 1) % L] = 1.0
        values = values + 0.01 * np.abs(rng.randn(L))
        data.append((Spectrum(grid=grid, values=values, mode=ABSORBANCE,
                              id=f"{prefix}{i}", smiles=smiles), smiles))
    return data


class TestTraining:
    def test_deterministic_history(self):
        pool = ["CCO", "CCN", "COC", "CCC"]
        data = tiny_dataset(pool, 8)
        valid = tiny_dataset(pool, 4, seed=9, prefix="v")
        vocab = TokenVocabulary.from_corpus(pool)
        histories = []
        for _ in range(2):
            model = TranslatorModel(micro_config(vocab_size=len(vocab), seed=1))
            cfg = TrainingConfig(batch_size=4, learning_rate=1e-3, warmup_steps=10,
                                 max_epochs=3, patience=25, seed=7)
            result = train(model, vocab, data, valid, cfg)
            histories.append([(r.train_loss, r.val_bleu) for r in result.history])
        assert histories[0] == histories[1]

    def test_early_stop_at_best_plus_patience(self):
        pool = ["CCO", "CCN"]
        data = tiny_dataset(pool, 4)
        valid = tiny_dataset(pool, 2, seed=5, prefix="v")
        vocab = TokenVocabulary.from_corpus(pool)
        model = TranslatorModel(micro_config(vocab_size=len(vocab)))
        # a vanishing learning rate freezes the model: BLEU stays flat
        cfg = TrainingConfig(batch_size=4, learning_rate=1e-30, warmup_steps=10,
                             max_epochs=50, patience=5, seed=0)
        result = train(model, vocab, data, valid, cfg)
        assert result.best_epoch == 1
        assert len(result.history) == 1 + 5
        assert result.stopped_early

    def test_overlapping_ids_rejected(self):
        pool = ["CCO"]
        data = tiny_dataset(pool, 4)
        vocab = TokenVocabulary.from_corpus(pool)
        model = TranslatorModel(micro_config(vocab_size=len(vocab)))
        cfg = TrainingConfig(max_epochs=1, warmup_steps=1)
        with pytest.raises(TrainingError, match="overlap"):
            train(model, vocab, data, data, cfg)

    def test_overfits_tiny_set(self):
        # fast version of the training-sanity acceptance criterion
        pool = ["CCO", "CCN", "COC", "CCC", "CCCl", "CCBr"]
        data = tiny_dataset(pool, 12)
        valid = tiny_dataset(pool, 6, seed=77, prefix="v")
        vocab = TokenVocabulary.from_corpus(pool)
        config = TranslatorConfig(
            vocab_size=len(vocab), spectrum_len=16, d=16, heads=2,
            encoder_layers=1, decoder_layers=1, ffn_mult=2,
            max_target_len=8, beam_width=3, seed=2,
        )
        model = TranslatorModel(config)
        cfg = TrainingConfig(batch_size=6, learning_rate=1e-2, warmup_steps=20,
                             max_epochs=200, patience=200, seed=3)
        result = train(model, vocab, data, valid, cfg)
        assert token_accuracy(result.model, data, vocab) >= 0.95


class TestCheckpoint:
    def test_round_trip(self, tmp_path):
        pool = ["CCO", "CCN"]
        vocab = TokenVocabulary.from_corpus(pool)
        model = TranslatorModel(micro_config(vocab_size=len(vocab), seed=11))
        path = tmp_path / "ck.json"
        save_checkpoint(path, model, vocab, metadata={"note": "test"})
        loaded, vocab2, meta = load_checkpoint(path)
        assert vocab2.tokens == vocab.tokens
        assert meta == {"note": "test"}
        s = micro_spectrum()
        tokens = torch.tensor([[BOS_ID, 4, 5]])
        with torch.no_grad():
            a = model(spectrum_tensor(s).unsqueeze(0), tokens)
            b = loaded(spectrum_tensor(s).unsqueeze(0), tokens)
        assert torch.equal(a, b)

    def test_rejects_wrong_format(self, tmp_path):
        from ir2mol.translator import CheckpointError

        path = tmp_path / "bad.json"
        path.write_text('{"format": "something-else"}')
        with pytest.raises(CheckpointError, match="not a translator"):
            load_checkpoint(path)
